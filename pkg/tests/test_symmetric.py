import csv
import io
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erasure_broadcast.channel import Channel, ChannelConfig, stream
from erasure_broadcast.symmetric import (
    FAIL,
    IntervalFamily,
    ThetaTable,
    consensus_broadcast,
    eval_symmetric_function,
    label_width,
    majority_of_three,
    majority_table,
    run_determine_interval,
    run_hamming_weight,
    run_pinpoint_weight,
    threshold_table,
    xor_table,
)


def theta_oracle(p, a, b):
    mpmath.mp.dps = 40
    q = 1 - mpmath.mpf(p)
    thr = math.ceil((1 - p) * (a + b) / 2 - 1e-12)
    return [
        mpmath.fsum(mpmath.binomial(ell, j) * q**j * (1 - q) ** (ell - j) for j in range(thr, ell + 1))
        for ell in range(a, b + 1)
    ]


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 3000), t=st.sampled_from([1 / 32, 1 / 16, 1 / 8, 1 / 4, 1.0]))
def test_interval_family_invariants(n, t):
    fam = IntervalFamily(n, t)  # verify() runs at construction
    for s in range(3):
        iv = fam.family(s)
        assert iv[0][0] == 0 and iv[-1][1] == n
        assert all(x[1] + 1 == y[0] for x, y in zip(iv, iv[1:]))
    for w in range(0, n + 1, max(1, n // 50)):
        for s in range(3):
            a, b = fam.interval(int(fam.label_of(w, s)))
            assert a <= w <= b
        assert sum(fam.margin(w, s) > t * math.sqrt(n) for s in range(3)) >= 2


def test_interval_family_validation():
    with pytest.raises(ValueError):
        IntervalFamily(0)
    with pytest.raises(ValueError):
        IntervalFamily(10, 0)
    fam = IntervalFamily(256)
    with pytest.raises(ValueError):
        fam.interval(fam.labels.stop + 5)
    assert label_width(fam) == 8


def test_label_of_clamps():
    fam = IntervalFamily(100, 1 / 8)
    assert np.array_equal(fam.label_of([-5.0, 1e9], 0), fam.label_of([0, 100], 0))


@pytest.mark.parametrize("a,b", [(100, 130), (0, 20), (230, 256)])
def test_theta_matches_oracle(a, b):
    table = ThetaTable(0.05, a, b)
    for got, want in zip(table.values, theta_oracle(0.05, a, b)):
        if want == 0:
            assert got == 0
        else:
            assert abs(got - float(want)) <= 1e-12 * float(want)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.01, 0.9), a=st.integers(0, 400), w=st.integers(0, 60))
def test_theta_monotone_and_bounded(p, a, w):
    v = ThetaTable(p, a, a + w).values
    assert np.all(v >= 0) and np.all(v <= 1)
    assert np.all(np.diff(v) >= -1e-15)


def test_theta_zero_below_threshold():
    t = ThetaTable(0.05, 100, 130)
    assert t.threshold > 100
    assert t.theta(100) == 0.0
    assert t.min_gap() >= 0


def test_theta_validation():
    with pytest.raises(ValueError):
        ThetaTable(0.1, 5, 4)
    with pytest.raises(ValueError):
        ThetaTable(1.0, 0, 4)


def test_theta_csv(tmp_path):
    t = ThetaTable(0.1, 10, 14)
    path = tmp_path / "theta.csv"
    t.to_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["ell", "theta"]
    assert [int(r[0]) for r in rows[1:]] == list(range(10, 15))
    assert [float(r[1]) for r in rows[1:]] == t.values.tolist()
    buf = io.StringIO()
    t.to_csv(buf)
    assert buf.getvalue() == path.read_text()


def test_nearest_ties_to_smallest():
    t = ThetaTable(0.05, 0, 4)
    # every ell below the threshold has theta 0
    assert t.nearest([0.0]).tolist() == [0]
    assert t.nearest([1.0]).tolist()[0] == int(np.argmax(t.values == t.values.max()))


def test_determine_interval_perfect_channel():
    n = 64
    for w in (0, 17, 64):
        bits = np.zeros(n, dtype=np.int8)
        bits[:w] = 1
        out = run_determine_interval(Channel(ChannelConfig(n, 0.0)), bits)
        assert np.all(out.h == w)
        assert out.agreement(w).all()
        for s in range(3):
            assert np.all(out.labels[:, s] == out.local_labels[:, s])
        if w == 0:
            assert all(a == 0 for a, _ in out.intervals(0))


def test_determine_interval_agreement_at_noise():
    n = 256
    bits = np.zeros(n, dtype=np.int8)
    bits[:128] = 1
    good = 0
    for s in range(100):
        out = run_determine_interval(Channel(ChannelConfig(n, 0.05, 2, s)), bits)
        good += out.agreement(128).sum() >= 2
    assert good >= 99


def test_consensus_broadcast_perfect():
    vals = np.arange(20) % 3
    res, decoded = consensus_broadcast(Channel(ChannelConfig(20, 0.0)), vals, 4)
    # positions get a majority across senders, so every processor lands on one value
    assert len(set(res.tolist())) == 1 and decoded.all()


def test_pinpoint_requires_erasures():
    with pytest.raises(ValueError):
        run_pinpoint_weight(Channel(ChannelConfig(16, 0.0)), np.zeros(16), (0, 16))
    with pytest.raises(ValueError):
        run_pinpoint_weight(Channel(ChannelConfig(16, 0.1)), np.zeros(16), (5, 2))


def test_pinpoint_centered_interval():
    n, w = 256, 128
    fam = IntervalFamily(n)
    bits = np.zeros(n, dtype=np.int8)
    bits[:w] = 1
    a, b = w - 3 * fam.width // 2, w + 3 * fam.width // 2
    hits = 0
    for s in range(200):
        out = run_pinpoint_weight(Channel(ChannelConfig(n, 0.05, 2, s)), bits, (a, b))
        hits += bool(np.all(out.estimates == w))
        assert out.undefined_theta == 0
    assert hits / 200 >= 0.9


def test_majority_of_three():
    assert majority_of_three([5], [5], [7]).tolist() == [5]
    assert majority_of_three([1], [2], [3]).tolist() == [FAIL]


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=20))
def test_majority_only_returns_inputs(rows):
    a, b, c = (list(x) for x in zip(*rows))
    out = majority_of_three(a, b, c)
    for v, x, y, z in zip(out, a, b, c):
        assert v == FAIL or v in (x, y, z)
        if v != FAIL:
            assert [x, y, z].count(v) >= 2


def test_hamming_weight_small():
    n = 64
    ok = 0
    for s in range(20):
        bits = (stream(s, 1).random(n) < 0.4).astype(np.int8)
        out = run_hamming_weight(Channel(ChannelConfig(n, 0.05, 2, s)), bits)
        ok += out.all_correct(int(bits.sum()))
        assert out.rounds_used == 143
    assert ok >= 15


def test_symmetric_tables():
    assert eval_symmetric_function(xor_table(5), 3) == 1
    assert eval_symmetric_function(majority_table(5), 2) == 0
    assert eval_symmetric_function(threshold_table(8, 3), 3) == 1
    with pytest.raises(ValueError):
        eval_symmetric_function(xor_table(5), 6)
    with pytest.raises(ValueError):
        eval_symmetric_function(xor_table(5), FAIL)
