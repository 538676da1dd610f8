import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erasure_broadcast.channel import Channel, ChannelConfig, stream
from erasure_broadcast.large_alphabet import (
    INPUT_ROUNDS,
    PAIRS,
    BlockPartition,
    EquationPair,
    FieldConfig,
    SimulationInvariantError,
    decode_subset,
    encode_subset,
    is_prime,
    run_large_alphabet,
    smallest_prime_at_least,
    solve_block_system,
)


def trial_division(m: int) -> bool:
    if m < 2:
        return False
    return all(m % d for d in range(2, math.isqrt(m) + 1))


def test_primality_matches_trial_division():
    assert [m for m in range(200) if is_prime(m)] == [m for m in range(200) if trial_division(m)]


@pytest.mark.parametrize("m,expected", [(2, 2), (90, 97), (64**6, 68719476767)])
def test_smallest_prime_at_least(m, expected):
    assert smallest_prime_at_least(m) == expected


def test_smallest_prime_cross_check():
    q = smallest_prime_at_least(2**36)
    assert trial_division(q)
    assert not any(trial_division(m) for m in range(2**36, q))


def test_prime_bounds():
    with pytest.raises(ValueError):
        smallest_prime_at_least(1)
    m = 10**25 + 1
    while math.gcd(m, math.prod(range(2, 42))) != 1:
        m += 2
    with pytest.raises(ValueError):
        is_prime(m)


def test_subset_encoding():
    assert encode_subset(set(), 4) == 0
    assert encode_subset({1}, 4) == 1
    assert encode_subset({1, 3}, 4) == 5
    assert decode_subset(5, 4) == {1, 3}
    with pytest.raises(ValueError):
        decode_subset(16, 4)
    with pytest.raises(ValueError):
        encode_subset({5}, 4)


@given(st.sets(st.integers(1, 30)))
def test_subset_roundtrip(T):
    assert decode_subset(encode_subset(T, 30), 30) == T


def test_field_config():
    f = FieldConfig.for_n(64)
    assert f.q == 68719476767
    f.check(64)
    with pytest.raises(ValueError):
        f.check(100)
    with pytest.raises(ValueError):
        FieldConfig(15)
    vals = f.random(stream(1), 1000)
    assert all(0 <= v < f.q for v in vals)
    big = FieldConfig.for_n(2000)
    assert big.q > 2**63
    assert all(0 <= v < big.q for v in big.random(stream(2), 100))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 3000), layout=st.sampled_from(["size", "count"]))
def test_block_partition(n, layout):
    part = BlockPartition(n, layout)
    assert part.k == max(1, math.floor(6 * math.log2(n)))
    rs = part.ranges()
    assert rs[0].start == 0 and rs[-1].stop == n
    assert all(a.stop == b.start for a, b in zip(rs, rs[1:]))
    assert part.sizes.max() - part.sizes.min() <= 1
    assert np.array_equal(np.bincount(part.block_of), part.sizes)
    if layout == "size":
        assert part.sizes.max() <= part.k


def test_solve_identity():
    f = FieldConfig(101)
    eqs = [EquationPair(s, 1 << c) for c, s in enumerate([3, 50, 7])]
    sol, unique = solve_block_system(eqs, 3, f, stream(0))
    assert unique and sol == [3, 50, 7]


def test_solve_underdetermined_uniform():
    q = 5
    counts = Counter()
    rng = stream(3)
    for _ in range(10_000):
        sol, unique = solve_block_system([EquationPair(2, 0b11)], 2, q, rng)
        assert not unique and (sol[0] + sol[1]) % q == 2
        counts[tuple(sol)] += 1
    assert len(counts) == q
    assert all(abs(c / 10_000 - 1 / q) < 0.02 for c in counts.values())


def test_solve_rank_frequency():
    f = FieldConfig(101)
    rng = stream(4)
    hits = 0
    for _ in range(2000):
        masks = rng.integers(0, 8, 15)
        x = rng.integers(0, 101, 3)
        eqs = [EquationPair(int(sum(x[c] for c in range(3) if m >> c & 1) % 101), int(m)) for m in masks]
        sol, unique = solve_block_system(eqs, 3, f, rng)
        if unique:
            assert sol == x.tolist()
        hits += unique
    assert hits / 2000 >= 1 - math.exp(-1.2)


def test_solve_inconsistent_raises():
    eqs = [EquationPair(1, 1), EquationPair(2, 1)]
    with pytest.raises(SimulationInvariantError):
        solve_block_system(eqs, 1, 101, stream(0))
    with pytest.raises(ValueError):
        solve_block_system([EquationPair(1, 4)], 2, 101, stream(0))


def test_perfect_channel_small():
    f = FieldConfig.for_n(8)
    inputs = f.random(stream(1), 8)
    out = run_large_alphabet(Channel(ChannelConfig(8, 0.0)), f, inputs)
    assert out.all_correct(inputs) and out.solved.all()
    assert out.rounds_used == INPUT_ROUNDS + 2 * PAIRS


def test_all_zero_inputs():
    f = FieldConfig.for_n(16)
    out = run_large_alphabet(Channel(ChannelConfig(16, 0.2, 1, 3)), f, [0] * 16)
    assert np.all(out.X[out.solved] == 0)


def test_transmitted_sums_match_masks():
    n = 32
    f = FieldConfig.for_n(n)
    inputs = f.random(stream(2), n)
    out = run_large_alphabet(Channel(ChannelConfig(n, 0.2, 1, 2)), f, inputs)
    part = BlockPartition(n)
    for t in range(PAIRS):
        for i in range(n):
            members = part.ranges()[part.block_of[i]]
            T = decode_subset(int(out.masks[t, i]), len(members))
            assert int(out.sums[t, i]) == sum(inputs[members[j - 1]] for j in T) % f.q


def test_inclusion_marginal_is_half():
    n, p = 48, 0.3
    f = FieldConfig.for_n(n)
    part = BlockPartition(n)
    bits = []
    for s in range(40):
        out = run_large_alphabet(Channel(ChannelConfig(n, p, 1, s)), f, [1] * n)
        assert out.inclusion_probability == pytest.approx(1 / (2 * (1 - p)))
        for t in range(PAIRS):
            for i in range(n):
                size = part.sizes[part.block_of[i]]
                bits.extend((int(out.masks[t, i]) >> c) & 1 for c in range(size))
    assert abs(np.mean(bits) - 0.5) < 0.01


def test_rejects_high_effective_erasure():
    f = FieldConfig.for_n(8)
    with pytest.raises(ValueError):
        run_large_alphabet(Channel(ChannelConfig(8, 0.6)), f, [0] * 8)


def test_rounds_are_gamma_wrapped():
    f = FieldConfig.for_n(8)
    ch = Channel(ChannelConfig(8, 0.6, 2, 0))
    out = run_large_alphabet(ch, f, [1] * 8)
    assert out.rounds_used == ch.rounds == 2 * 30


def test_unique_implies_correct_under_noise():
    n = 40
    f = FieldConfig.for_n(n)
    part = BlockPartition(n)
    for s in range(10):
        inputs = f.random(stream(s, 9), n)
        out = run_large_alphabet(Channel(ChannelConfig(n, 0.45, 1, s)), f, inputs)
        for i in range(n):
            for b, r in enumerate(part.ranges()):
                if out.unique[i, b]:
                    assert out.X[i, r.start : r.stop].tolist() == inputs[r.start : r.stop]
