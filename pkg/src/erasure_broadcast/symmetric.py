"""Constant-round Hamming weight, hence any symmetric function.

Two phases.  ``run_determine_interval`` lets every processor estimate the
weight from one broadcast of all inputs and agree, for each of three shifted
families of overlapping intervals, on the interval containing it.
``run_pinpoint_weight`` then recovers the exact weight inside an interval
from the fraction of processors whose received count of ones clears the
interval midpoint.  ``run_hamming_weight`` runs the second phase on all three
intervals and takes a majority.

Both phases finish with the group-chunked codeword broadcast: processor ``i``
transmits chunk ``i mod ceil(log2 n)`` of the codeword of its value, so every
position is sent once per group.  Receivers take a per-position majority over
the copies they got and decode when enough positions arrived.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ERASED, Channel
from .codes import make_code
from .core_protocols import as_channel
from .learn_input import group_size
from .params import DEFAULT_PARAMS, ProtocolParams

FAIL = -1
DEFAULT_T_SCALE = 1 / 20


def value_width(n: int) -> int:
    """Bits of a weight in ``[0, n]``."""
    return max(1, n.bit_length())


def label_width(family: "IntervalFamily") -> int:
    """Bits of an interval label: ``ceil(log2 n)`` unless the labels need more."""
    return max(1, (family.n - 1).bit_length(), (family.labels.stop - 1).bit_length())


@dataclass(frozen=True)
class IntervalFamily:
    """Disjoint intervals ``A_0 .. A_{k-1}`` of ``width`` integers covering ``[0, n]``.

    ``A_m`` holds the integers ``m*width .. (m+1)*width - 1`` and a real value
    ``h`` belongs to ``A_m`` with ``m = floor((h + 1/2) / width)``.
    ``B_i = A_i u A_{i+1} u A_{i+2}`` for ``i`` in ``-2 .. k-1`` (missing ``A``'s
    are empty) and family ``s`` collects the ``B_i`` with ``i = s mod 3``.
    """

    n: int
    t_scale: float = DEFAULT_T_SCALE

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.t_scale <= 0:
            raise ValueError("t_scale must be positive")
        self.verify()

    @property
    def width(self) -> int:
        # strictly above 2 t sqrt(n), so some outer family keeps margin > t sqrt(n)
        return max(2, math.floor(2 * self.t_scale * math.sqrt(self.n)) + 1)

    @property
    def k(self) -> int:
        return self.n // self.width + 1

    @property
    def labels(self) -> range:
        """Encoded labels ``i + 2`` of every ``B_i``."""
        return range(0, self.k + 2)

    def a_index(self, h) -> np.ndarray:
        h = np.clip(np.asarray(h, dtype=np.float64), 0, self.n)
        return np.floor((h + 0.5) / self.width).astype(np.int64)

    def label_of(self, h, s: int) -> np.ndarray:
        """Label of the ``B`` in family ``s`` containing ``h``."""
        m = self.a_index(h)
        i = m - ((m - s) % 3)
        return i + 2

    def interval(self, label: int) -> tuple[int, int]:
        """Integer range ``[a, b]`` of ``B_{label-2}`` clipped to ``[0, n]``."""
        i = int(label) - 2
        lo = max(0, i * self.width)
        hi = min(self.n, (i + 3) * self.width - 1)
        if lo > hi:
            raise ValueError(f"label {label} names an empty interval")
        return lo, hi

    def family(self, s: int) -> list[tuple[int, int]]:
        out = []
        for label in self.labels:
            if (label - 2 - s) % 3 == 0:
                try:
                    out.append(self.interval(label))
                except ValueError:
                    continue
        return out

    def margin(self, w: int, s: int) -> float:
        """Distance from ``w`` to the nearer real boundary of its ``B`` in family ``s``.

        Estimates are clamped to ``[0, n]``, so an edge beyond either end of
        the range cannot be crossed and does not count.
        """
        i = int(self.label_of(w, s)) - 2
        lo = i * self.width - 0.5
        hi = (i + 3) * self.width - 0.5
        lo = -math.inf if lo <= -0.5 else lo
        hi = math.inf if hi >= self.n + 0.5 else hi
        return min(w - lo, hi - w)

    def verify(self) -> None:
        """Coverage and the two-of-three margin, checked over every weight."""
        for s in range(3):
            cover = np.zeros(self.n + 1, dtype=np.int64)
            for a, b in self.family(s):
                cover[a : b + 1] += 1
            if not np.all(cover == 1):
                raise AssertionError(f"family {s} is not a disjoint cover of [0, n]")
        bound = self.t_scale * math.sqrt(self.n)
        for w in range(self.n + 1):
            good = sum(self.margin(w, s) > bound for s in range(3))
            if good < 2:
                raise AssertionError(f"weight {w} is near the boundary in two families")


def _log_binom_sum(ell: int, js, log_q: float, log_p: float) -> float:
    """``log sum_j C(ell, j) q^j p^(ell-j)`` over ``js`` (non-empty)."""
    logs = [
        math.lgamma(ell + 1) - math.lgamma(j + 1) - math.lgamma(ell - j + 1) + j * log_q + (ell - j) * log_p
        for j in js
    ]
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


@lru_cache(maxsize=4096)
def _theta_values(p: float, a: int, b: int) -> tuple[float, ...]:
    q = 1.0 - p
    c = math.ceil(q * (a + b) / 2 - 1e-12)
    out = []
    for ell in range(a, b + 1):
        if c > ell:
            out.append(0.0)
        elif c <= 0 or p == 0:
            out.append(1.0)
        elif c > q * ell:
            # threshold above the mean: sum the upper tail directly
            out.append(min(1.0, math.exp(_log_binom_sum(ell, range(c, ell + 1), math.log(q), math.log(p)))))
        else:
            # upper tail above 1/2: one minus the lower tail keeps the digits
            out.append(max(0.0, 1.0 - math.exp(_log_binom_sum(ell, range(0, c), math.log(q), math.log(p)))))
    # the exact sequence is non-decreasing; remove last-ulp inversions
    return tuple(np.maximum.accumulate(out).tolist()) if out else ()


@dataclass(frozen=True)
class ThetaTable:
    """``theta[l]``: chance that ``l`` coins with heads probability ``1 - p``
    show at least ``(1 - p)(a + b) / 2`` heads, for ``l`` in ``[a, b]``."""

    p: float
    a: int
    b: int

    def __post_init__(self):
        if not 0 <= self.a <= self.b:
            raise ValueError("need 0 <= a <= b")
        if not 0 <= self.p < 1:
            raise ValueError("p must satisfy 0 <= p < 1")

    @property
    def threshold(self) -> float:
        return (1 - self.p) * (self.a + self.b) / 2

    @property
    def values(self) -> np.ndarray:
        return np.array(_theta_values(float(self.p), int(self.a), int(self.b)))

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    def theta(self, ell: int) -> float:
        return float(self.values[ell - self.a])

    def nearest(self, estimate) -> np.ndarray:
        """``argmin_l |theta_l - estimate|`` with ties to the smallest ``l``."""
        est = np.asarray(estimate, dtype=np.float64)
        diff = np.abs(self.values[None, :] - est.reshape(-1, 1))
        return (self.a + np.argmin(diff, axis=1)).reshape(est.shape)

    def min_gap(self) -> float:
        v = self.values
        return float(np.diff(v).min()) if v.size > 1 else 0.0

    def rows(self) -> list[tuple[int, float]]:
        return [(int(ell), float(v)) for ell, v in zip(self.ells, self.values)]

    def to_csv(self, path_or_file) -> None:
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["ell", "theta"])
            for ell, v in self.rows():
                w.writerow([ell, repr(v)])
        finally:
            if own:
                fh.close()


def _bits(values: np.ndarray, width: int) -> np.ndarray:
    return ((np.asarray(values, dtype=np.int64)[:, None] >> np.arange(width)) & 1).astype(np.int8)


def _from_bits(bits: np.ndarray) -> np.ndarray:
    return (bits.astype(np.int64) << np.arange(bits.shape[1])).sum(axis=1)


def consensus_broadcast(
    ch: Channel,
    values,
    width: int,
    params: ProtocolParams = DEFAULT_PARAMS,
    valid_max: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Agree on a ``width``-bit value through the group-chunked codeword broadcast.

    Returns ``(result, decoded)``: each processor's value after the step and
    whether it came from decoding (otherwise the processor kept its own).
    """
    values = np.asarray(values, dtype=np.int64)
    n = values.shape[0]
    code = make_code(width)
    L = code.codeword_len
    g = min(group_size(n), n) if n > 1 else 1
    chunk = params.chunk_rounds(L, g)
    cw = code.encode_many(_bits(values, width)).astype(np.int64)  # (n, L)
    slot = np.arange(n) % g
    ones = np.zeros((n, L), dtype=np.int64)
    zeros = np.zeros((n, L), dtype=np.int64)
    for t in range(chunk):
        ok = ch.delivered((n, n))  # [sender, receiver]
        pos = slot * chunk + t
        live = np.flatnonzero(pos < L)
        if live.size == 0:
            continue
        onehot = np.zeros((live.size, L), dtype=np.float64)
        onehot[np.arange(live.size), pos[live]] = 1.0
        bit = cw[live, pos[live]]
        okf = ok[live].astype(np.float64)  # (senders, receivers)
        ones += np.rint((okf * bit[:, None]).T @ onehot).astype(np.int64)
        zeros += np.rint((okf * (1 - bit)[:, None]).T @ onehot).astype(np.int64)
    arrived = (ones + zeros) > 0
    word = np.where(ones > zeros, 1, np.where(zeros > ones, 0, ERASED)).astype(np.int8)
    result = values.copy()
    decoded = np.zeros(n, dtype=bool)
    enough = arrived.sum(axis=1) >= params.decode_fraction * L
    if enough.any():
        rows = np.flatnonzero(enough)
        msgs, ok = code.decode_many(word[rows])
        got = _from_bits(msgs)
        if valid_max is not None:
            ok &= got <= valid_max
        result[rows[ok]] = got[ok]
        decoded[rows[ok]] = True
    return result, decoded


@dataclass
class IntervalOutcome:
    h: np.ndarray  # (n,) local weight estimates
    local_labels: np.ndarray  # (n, 3) labels before agreement
    labels: np.ndarray  # (n, 3) returned labels C_{i,s}
    family: IntervalFamily
    rounds_used: int

    def intervals(self, i: int) -> list[tuple[int, int]]:
        return [self.family.interval(int(l)) for l in self.labels[i]]

    def agreement(self, weight: int) -> np.ndarray:
        """Per family: all processors hold the same label and its interval contains ``weight``."""
        out = np.zeros(3, dtype=bool)
        for s in range(3):
            col = self.labels[:, s]
            if np.all(col == col[0]):
                a, b = self.family.interval(int(col[0]))
                out[s] = a <= weight <= b
        return out


def run_determine_interval(
    channel,
    bits,
    t_scale: float = DEFAULT_T_SCALE,
    params: ProtocolParams = DEFAULT_PARAMS,
) -> IntervalOutcome:
    """Each processor's three interval labels ``C_{i,0..2}``.

    The input broadcast is gamma-wrapped and ``h_i`` divides the ones received
    by ``1 - p ** gamma``.  Labels are then agreed on, one family at a time.
    """
    ch = as_channel(channel)
    bits = np.asarray(bits, dtype=np.int8)
    n = bits.shape[0]
    fam = IntervalFamily(n, t_scale)
    start = ch.rounds
    ok = ch.delivered((n, n))
    ones = (ok & (bits[:, None] == 1)).sum(axis=0)
    h = np.clip(ones / (1.0 - ch.config.p_eff), 0, n)
    local = np.stack([fam.label_of(h, s) for s in range(3)], axis=1)
    width = label_width(fam)
    labels = np.empty_like(local)
    for s in range(3):
        labels[:, s], _ = consensus_broadcast(ch, local[:, s], width, params, fam.labels.stop - 1)
    return IntervalOutcome(h, local, labels, fam, ch.rounds - start)


@dataclass
class PinpointOutcome:
    estimates: np.ndarray  # (n,) returned weights
    local_estimates: np.ndarray  # (n,) argmin estimates before agreement
    theta_hat: np.ndarray  # (n,)
    beta: np.ndarray  # (n,)
    undefined_theta: int
    rounds_used: int


def run_pinpoint_weight(
    channel,
    bits,
    interval,
    params: ProtocolParams = DEFAULT_PARAMS,
) -> PinpointOutcome:
    """Every processor's estimate of the weight within its interval.

    ``interval`` is one ``(a, b)`` for all processors or an ``(n, 2)`` array
    giving each processor its own.  The input broadcast is one unwrapped
    physical round, so the count of ones keeps the spread at erasure
    probability ``p`` that the theta table describes; the other broadcasts
    are gamma-wrapped.
    """
    ch = as_channel(channel)
    bits = np.asarray(bits, dtype=np.int8)
    n = bits.shape[0]
    p = ch.config.p
    if p == 0:
        raise ValueError("the weight cannot be pinpointed without erasures (p = 0)")
    iv = np.asarray(interval, dtype=np.int64)
    if iv.ndim == 1:
        iv = np.broadcast_to(iv, (n, 2))
    a, b = iv[:, 0], iv[:, 1]
    if np.any(a > b) or np.any(a < 0):
        raise ValueError("intervals must satisfy 0 <= a <= b")
    start = ch.rounds

    ok = ch.delivered((n, n), gamma=1)
    ones = (ok & (bits[:, None] == 1)).sum(axis=0)
    # at least (1-p)(a+b)/2 ones, matching the theta table's event
    beta = (ones >= (1 - p) * (a + b) / 2 - 1e-12).astype(np.int8)

    ok = ch.delivered((n, n))
    got1 = (ok & (beta[:, None] == 1)).sum(axis=0)
    got = ok.sum(axis=0)
    undefined = got == 0
    theta_hat = np.where(undefined, 0.5, got1 / np.maximum(got, 1))

    local = np.empty(n, dtype=np.int64)
    pairs = np.stack([a, b], axis=1)
    uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
    for u, (ua, ub) in enumerate(uniq):
        sel = inv.reshape(-1) == u
        local[sel] = ThetaTable(p, int(ua), int(ub)).nearest(theta_hat[sel])

    final, _ = consensus_broadcast(ch, local, value_width(n), params, n)
    return PinpointOutcome(final, local, theta_hat, beta, int(undefined.sum()), ch.rounds - start)


def majority_of_three(n0, n1, n2) -> np.ndarray:
    """Elementwise majority; ``FAIL`` where all three differ."""
    n0, n1, n2 = (np.asarray(v, dtype=np.int64) for v in (n0, n1, n2))
    return np.where((n0 == n1) | (n0 == n2), n0, np.where(n1 == n2, n1, FAIL))


@dataclass
class HammingOutcome:
    outputs: np.ndarray  # (n,) weight or FAIL
    candidates: np.ndarray  # (n, 3) the three pinpoint estimates
    intervals: IntervalOutcome
    rounds_used: int

    def all_correct(self, weight: int) -> bool:
        return bool(np.all(self.outputs == weight))


def run_hamming_weight(
    channel,
    bits,
    t_scale: float = DEFAULT_T_SCALE,
    params: ProtocolParams = DEFAULT_PARAMS,
) -> HammingOutcome:
    ch = as_channel(channel)
    start = ch.rounds
    bits = np.asarray(bits, dtype=np.int8)
    det = run_determine_interval(ch, bits, t_scale, params)
    fam = det.family
    cands = np.empty((bits.shape[0], 3), dtype=np.int64)
    for s in range(3):
        iv = np.array([fam.interval(int(l)) for l in det.labels[:, s]], dtype=np.int64)
        cands[:, s] = run_pinpoint_weight(ch, bits, iv, params).estimates
    out = majority_of_three(cands[:, 0], cands[:, 1], cands[:, 2])
    return HammingOutcome(out, cands, det, ch.rounds - start)


# weight-indexed truth tables


def xor_table(n: int) -> list[int]:
    return [w % 2 for w in range(n + 1)]


def majority_table(n: int) -> list[int]:
    return [int(2 * w > n) for w in range(n + 1)]


def threshold_table(n: int, k: int) -> list[int]:
    return [int(w >= k) for w in range(n + 1)]


def eval_symmetric_function(table, weight: int):
    """Value of a symmetric function given as its table over weights ``0..n``."""
    if weight == FAIL:
        raise ValueError("the weight computation failed")
    if not 0 <= weight < len(table):
        raise ValueError(f"weight {weight} outside 0..{len(table) - 1}")
    return table[weight]
