"""The thirteen acceptance criteria, each at its stated tolerance."""

import math
import time

import mpmath
import numpy as np
import pytest

from erasure_broadcast.channel import Channel, ChannelConfig, required_gamma, stream
from erasure_broadcast.cli import main as cli_main
from erasure_broadcast.codes import make_code, min_distance_bruteforce, random_binary_matrix_rank, reed_muller_1_5
from erasure_broadcast.core_protocols import and_batch, equality_batch, run_and
from erasure_broadcast.large_alphabet import FieldConfig, run_large_alphabet
from erasure_broadcast.learn_input import (
    Classification,
    RunReport,
    classify_outcome,
    group_size,
    learn_batch,
    log_star,
    recursion_depth,
    run_learn_input,
)
from erasure_broadcast.params import DEFAULT_PARAMS
from erasure_broadcast.symmetric import IntervalFamily, ThetaTable, run_hamming_weight


@pytest.mark.slow
def test_zero_noise_determinism(criterion):
    start = time.perf_counter()
    bad = []
    for n in (2, 3, 16, 99, 100, 128, 1024, 4096):
        G = 2 if n == 4096 else 20  # batch size bounded by memory at the largest n
        rng = stream(101, n)
        for _ in range(0, 20, G):
            x = rng.integers(0, 2, (G, n)).astype(np.int8)
            X, v = learn_batch(Channel(ChannelConfig(n, 0.0)), x, DEFAULT_PARAMS, RunReport())
            for g in range(G):
                if classify_outcome(x[g], X[g], v[g]) is not Classification.SUCCESS:
                    bad.append(n)
    elapsed = time.perf_counter() - start
    criterion(1, not bad and elapsed < 60, f"160 runs at p=0, failures at n={sorted(set(bad))}, {elapsed:.1f}s")


def test_and_one_sided(criterion):
    n = 50
    ones = np.ones((1000, n), dtype=np.int8)
    random_ok = bool(np.all(and_batch(Channel(ChannelConfig(n, 0.5, 1, 7), physical=True), ones, 100) == 1))
    hook = Channel(ChannelConfig(n, 0.0), erasure_hook=lambda r, shape: np.ones(shape, dtype=bool))
    adversarial_ok = bool(np.all(run_and(hook, np.ones(n)) == 1))
    criterion(2, random_ok and adversarial_ok, f"random patterns ok={random_ok}, all-erased ok={adversarial_ok}")


def test_and_completeness(criterion):
    n, p, gamma = 200, 0.1, 2  # effective erasure 0.01
    good = 0
    for c in range(10):
        rng = stream(202, c)
        x = np.ones((1000, n), dtype=np.int8)
        x[np.arange(1000), rng.integers(0, n, 1000)] = 0
        out = and_batch(Channel(ChannelConfig(n, p, gamma, c)), x, DEFAULT_PARAMS.and_rounds)
        good += int((out == 0).all(axis=1).sum())
    rate = good / 10_000
    criterion(3, rate >= 0.999, f"all-zero output in {rate:.4f} of 10^4 trials")


def test_equality(criterion):
    n = 256
    rates = {}
    for equal in (True, False):
        good = 0
        for c in range(10):
            rng = stream(303, int(equal), c)
            s = np.repeat(rng.integers(0, 2, (100, 1, n)).astype(np.int8), n, axis=1)
            if not equal:
                s[np.arange(100), rng.integers(0, n, 100), rng.integers(0, n, 100)] ^= 1
            v, _ = equality_batch(Channel(ChannelConfig(n, 0.1, 2, 10 * int(equal) + c)), s)
            good += int((v == int(equal)).all(axis=1).sum())
        rates[equal] = good / 1000
    ok = rates[True] >= 0.999 and rates[False] >= 0.999
    criterion(4, ok, f"equal -> all 1 in {rates[True]:.3f}, one bit differs -> all 0 in {rates[False]:.3f}")


def test_code_distance(criterion):
    start = time.perf_counter()
    ok = True
    parts = []
    for k in (6, 12):
        spec = make_code(k)
        d = min_distance_bruteforce(spec)
        ok &= d >= 0.25 * spec.codeword_len
        parts.append(f"k={k}: d={d}/{spec.codeword_len}")
    inner = reed_muller_1_5()
    inner_d = int(min(bin(int(c)).count("1") for c in inner.codebook[1:]))
    ok &= inner.n == 32 and inner_d == 16
    elapsed = time.perf_counter() - start
    criterion(5, ok and elapsed < 60, f"{', '.join(parts)}, inner d={inner_d} at length {inner.n}, {elapsed:.1f}s")


def test_erasure_decoding(criterion):
    spec = make_code(12)
    L = spec.codeword_len
    radius = math.ceil(spec.designed_distance / 2) - 1  # erasures strictly inside half the distance
    rng = stream(606)
    msgs = rng.integers(0, 2, (10_000, 12))
    words = spec.encode_many(msgs).astype(np.int8)
    counts = rng.integers(0, radius + 1, 10_000)
    for r in range(10_000):
        words[r, rng.choice(L, counts[r], replace=False)] = -1
    got, ok = spec.decode_many(words)
    failures = int((~ok).sum() + (~(got == msgs).all(axis=1)).sum())
    criterion(6, failures == 0, f"10^4 patterns of up to {radius} erasures in {L} bits, {failures} failures")


def test_rank_lemma(criterion):
    rng = stream(707)
    full8 = np.mean([random_binary_matrix_rank(8, 40, 101, rng) for _ in range(10_000)])
    full1 = np.mean([random_binary_matrix_rank(1, 5, 101, rng) for _ in range(10_000)])
    ok = full8 >= 0.9592 - 0.01 and abs(full1 - 0.96875) <= 0.01
    criterion(7, ok, f"k=8 rows=40 full rank {full8:.4f}; k=1 rows=5 full rank {full1:.4f}")


@pytest.mark.slow
def test_large_alphabet(criterion):
    n = 64
    field = FieldConfig.for_n(n)
    good = 0
    rounds = set()
    for t in range(1000):
        inputs = field.random(stream(808, t, 1), n)
        ch = Channel(ChannelConfig(n, 0.1, 1, t), stream(808, t, 0))
        out = run_large_alphabet(ch, field, inputs)
        good += out.all_correct(inputs)
        rounds.add(out.rounds_used)
    rate = good / 1000
    criterion(8, rate >= 0.99 and rounds == {30}, f"q={field.q}, all correct in {rate:.3f}, rounds {sorted(rounds)}")


@pytest.mark.slow
def test_learn_input_at_noise(criterion):
    n, p = 1024, 0.5
    gamma = required_gamma(p, 0.01)
    counts = {c: 0 for c in Classification}
    for t in range(200):
        bits = stream(909, t, 1).integers(0, 2, n)
        out = run_learn_input(Channel(ChannelConfig(n, p, gamma, t), stream(909, t, 0)), bits)
        counts[out.classification] += 1
    rate = counts[Classification.SUCCESS] / 200
    fwok = counts[Classification.FAIL_WITHOUT_KNOWLEDGE]
    criterion(9, rate >= 0.99 and fwok == 0, f"gamma={gamma}, success {rate:.3f}, fail without knowledge {fwok}")


def test_round_recurrence(criterion):
    def rounds(n):
        return run_learn_input(Channel(ChannelConfig(n, 0.0)), np.zeros(n)).rounds_used

    d12 = rounds(4096) - rounds(group_size(4096))
    d10 = rounds(1024) - rounds(group_size(1024))
    depth_ok = all(recursion_depth(2**e) <= log_star(2**e) + 2 for e in range(1, 17))
    criterion(10, d12 == d10 and depth_ok, f"per-level cost {d12} vs {d10}, depth bound holds to 2^16: {depth_ok}")


@pytest.mark.slow
def test_hamming_weight(criterion):
    n, p = 256, 0.05
    gamma = required_gamma(p, 0.01)
    correct = agree = 0
    for t in range(1000):
        rng = stream(1111, t, 1)
        bits = (rng.random(n) < rng.random()).astype(np.int8)
        w = int(bits.sum())
        out = run_hamming_weight(Channel(ChannelConfig(n, p, gamma, t), stream(1111, t, 0)), bits)
        correct += out.all_correct(w)
        agree += int(out.intervals.agreement(w).sum() >= 2)
    ok = correct / 1000 >= 0.75 and agree / 1000 >= 0.99
    criterion(11, ok, f"gamma={gamma}, correct weight {correct / 1000:.3f}, two-of-three agreement {agree / 1000:.3f}")


def test_theta_exactness(criterion):
    n, p = 256, 0.05
    fam = IntervalFamily(n)
    intervals = [fam.interval(int(fam.label_of(w, s))) for w, s in ((40, 0), (128, 1), (250, 2))]
    intervals.append((100, 160))
    mpmath.mp.dps = 40
    worst = 0.0
    monotone = True
    for a, b in intervals:
        table = ThetaTable(p, a, b)
        thr = math.ceil((1 - p) * (a + b) / 2 - 1e-12)
        for ell, got in zip(table.ells, table.values):
            want = mpmath.fsum(
                mpmath.binomial(ell, j) * mpmath.mpf(1 - p) ** j * mpmath.mpf(p) ** (ell - j)
                for j in range(thr, ell + 1)
            )
            if want == 0:
                worst = max(worst, abs(got))
            else:
                worst = max(worst, float(abs(got - want) / want))
        monotone &= bool(np.all(np.diff(table.values) >= 0))
    criterion(12, worst < 1e-12 and monotone, f"{len(intervals)} tables, worst relative error {worst:.1e}, monotone {monotone}")


def test_reproducibility(criterion, tmp_path):
    args = ["sweep", "--protocol", "learn_input", "--n", "32", "150", "--p", "0.3", "0.5",
            "--gamma-target", "0.01", "--trials", "5", "--seed", "1313"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli_main(args + ["--out", str(a)])
    cli_main(args + ["--out", str(b), "--jobs", "2"])
    same = a.read_bytes() == b.read_bytes() and len(a.read_bytes()) > 0
    criterion(13, same, f"two runs with seed 1313 byte-identical: {same}")
