"""Recursive protocol by which every processor learns the whole input.

Processors split into contiguous groups of ``ceil(log2 n)``, learn their
group's input recursively, then publish it to everyone through a group
codeword.  Processors of failed groups are covered by helper amplification:
successful processors relay a failed processor's bit.  A final EqualityTest
lets every processor flag whether the run succeeded.

All groups of one recursion level run in lock-step on the shared clock, so a
level costs the maximum of its sub-runs plus a fixed number of broadcasts.
Sub-runs only simulate receptions inside their group; every other reception
in those rounds is ignored by the protocol.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._rows import unique_rows
from .channel import ERASED, Channel, ChannelConfig
from .codes import make_code
from .core_protocols import as_channel, equality_batch
from .params import DEFAULT_PARAMS, ProtocolParams

# relay symbol for "I did not hear the processor I was helping"
PASS = 2


class Classification(str, enum.Enum):
    SUCCESS = "success"
    FAIL_WITH_KNOWLEDGE = "fail_with_knowledge"
    FAIL_WITHOUT_KNOWLEDGE = "fail_without_knowledge"


def classify_outcome(truth, X, v) -> Classification:
    truth = np.asarray(truth)
    X = np.asarray(X)
    v = np.asarray(v)
    if np.all(v == 1) and np.all(X == truth[None, :]):
        return Classification.SUCCESS
    if np.all(v == 0):
        return Classification.FAIL_WITH_KNOWLEDGE
    return Classification.FAIL_WITHOUT_KNOWLEDGE


def group_size(n: int) -> int:
    """``ceil(log2 n)``, at least 1."""
    return max(1, (n - 1).bit_length())


@dataclass(frozen=True)
class GroupPartition:
    """Contiguous groups of ``group_size``; all but the last have exactly that size.

    With ``merge_remainder`` the ``n mod group_size`` leftover processors join
    the last full group (so it is larger); otherwise they form a short group.
    """

    n: int
    group_size: int
    merge_remainder: bool = True

    @classmethod
    def for_n(cls, n: int, merge_remainder: bool = True) -> "GroupPartition":
        return cls(n, group_size(n), merge_remainder)

    @property
    def full_groups(self) -> int:
        return self.n // self.group_size

    @property
    def remainder(self) -> int:
        return self.n - self.full_groups * self.group_size

    @property
    def batches(self) -> list[tuple[int, int, int]]:
        """``(first index, group size, group count)`` runs of equal-size groups."""
        g, F, rem = self.group_size, self.full_groups, self.remainder
        if rem == 0:
            return [(0, g, F)]
        if not self.merge_remainder:
            return [(0, g, F), (F * g, rem, 1)]
        head = [(0, g, F - 1)] if F > 1 else []
        return head + [((F - 1) * g, g + rem, 1)]

    @property
    def groups(self) -> list[range]:
        out = []
        for first, size, count in self.batches:
            out.extend(range(first + j * size, first + (j + 1) * size) for j in range(count))
        return out

    @property
    def starts(self) -> np.ndarray:
        return np.array([r.start for r in self.groups], dtype=np.int64)

    @property
    def sizes(self) -> list[int]:
        return sorted({size for _, size, _ in self.batches})

    @property
    def group_of(self) -> np.ndarray:
        gid = np.zeros(self.n, dtype=np.int64)
        gid[self.starts[1:]] = 1
        return np.cumsum(gid)


@dataclass
class HelperAssignment:
    """Helper bookkeeping of one processor, all indices 0-based."""

    R: np.ndarray
    z: int
    ell: int | None
    helper_sets: list[range]

    @classmethod
    def from_flags(cls, R, i: int) -> "HelperAssignment":
        R = np.asarray(R)
        n = R.shape[0]
        zeros = np.flatnonzero(R == 0)
        z = zeros.size
        if z == 0:
            return cls(R, 0, None, [])
        j = -(-(i + 1) * z // n)
        # M_s = { t : n(s-1)/z < t <= ns/z } over 1-based t
        sets = [range((n * (s - 1)) // z, (n * s) // z) for s in range(1, z + 1)]
        return cls(R, z, int(zeros[j - 1]), sets)


def recursion_depth(n: int, params: ProtocolParams = DEFAULT_PARAMS) -> int:
    """Depth of the recursion tree on ``n`` processors (0 for the base case)."""
    if n < params.base_cutoff:
        return 0
    sizes = GroupPartition.for_n(n, params.merge_remainder).sizes
    return 1 + max(recursion_depth(s, params) for s in sizes)


def log_star(n: float) -> int:
    count = 0
    while n > 1:
        n = math.log2(n)
        count += 1
    return count


def scheduled_rounds(n: int, gamma: int = 1, params: ProtocolParams = DEFAULT_PARAMS) -> int:
    """Physical rounds the protocol uses on ``n`` processors (input independent)."""
    eq = gamma * (params.chunk_rounds(make_code(n).codeword_len, n) + params.and_rounds)
    if n < params.base_cutoff:
        return gamma * params.base_rounds + eq
    sizes = GroupPartition.for_n(n, params.merge_remainder).sizes
    sub = max(scheduled_rounds(s, gamma, params) for s in sizes)
    chunk = max(params.chunk_rounds(make_code(s).codeword_len, s) for s in sizes)
    return sub + gamma * (3 + chunk) + eq


@dataclass
class LevelReport:
    n: int
    depth: int
    group_size: int
    groups: int
    instances: int
    rounds: int = 0
    failed_groups: int = 0


@dataclass
class RunReport:
    levels: list[LevelReport] = field(default_factory=list)
    verification_false_accepts: int = 0

    @property
    def depth(self) -> int:
        return max((lv.depth for lv in self.levels), default=0)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "levels": [vars(lv) for lv in self.levels],
            "verification_false_accepts": self.verification_false_accepts,
        }


def _base_case(ch: Channel, x: np.ndarray, params: ProtocolParams):
    G, n = x.shape
    ok = ch.delivered((G, n, n), repeats=params.base_rounds).transpose(0, 2, 1)  # [g, r, s]
    S = np.broadcast_to(x[:, None, :], (G, n, n)).copy()
    missing = ~ok
    if missing.any():
        S[missing] = ch.rng.integers(0, 2, size=int(missing.sum()), dtype=np.int8)
    return S


def _group_flags(ok: np.ndarray, flags: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """(R_i)_J per receiver and group: something arrived from J and all of it was 1."""
    heard = np.logical_or.reduceat(ok, starts, axis=1)  # (G, groups, n_r)
    heard_zero = np.logical_or.reduceat(ok & (flags[:, :, None] != 1), starts, axis=1)
    return (heard & ~heard_zero).transpose(0, 2, 1)  # (G, n_r, groups)


def _decode_group_words(ch, code, full, delivered, wanted, params, max_cells: int = 1 << 24):
    """Each receiver's estimate of every group string of one batch.

    ``full`` (G, groups, L) is what the groups' members jointly sent and
    ``delivered`` (G, groups, L, n_r) marks which positions reached each
    receiver.  Receivers decode where ``wanted`` and enough arrived, and keep
    fair random bits elsewhere.
    """
    L = code.codeword_len
    G, n_r, count = wanted.shape
    arrived = np.count_nonzero(delivered, axis=2).transpose(0, 2, 1)
    use = wanted & (arrived >= params.decode_fraction * L)
    out = ch.rng.integers(0, 2, size=(G, n_r, count, code.k), dtype=np.int8)

    # receivers that got every position all see the same word
    uniq, inv = unique_rows(full.reshape(G * count, L))
    msgs, ok = code.decode_many(uniq)
    full_msg = msgs[inv].reshape(G, count, code.k).astype(np.int8)
    full_ok = ok[inv].reshape(G, count)
    complete = use & (arrived == L) & full_ok[:, None, :]
    gi, ri, ji = np.nonzero(complete)
    out[gi, ri, ji] = full_msg[gi, ji]

    partial = use & (arrived < L)
    if partial.any():
        gi, ri, ji = np.nonzero(partial)
        step = max(1, max_cells // L)
        for lo in range(0, gi.size, step):
            g_, r_, j_ = gi[lo : lo + step], ri[lo : lo + step], ji[lo : lo + step]
            words = np.where(delivered[g_, j_, :, r_], full[g_, j_], ERASED).astype(np.int8)
            uniq, inv = unique_rows(words)
            msgs, ok = code.decode_many(uniq)
            good = ok[inv]
            out[g_[good], r_[good], j_[good]] = msgs[inv][good]
    return out


def learn_batch(
    ch: Channel,
    x: np.ndarray,
    params: ProtocolParams = DEFAULT_PARAMS,
    report: RunReport | None = None,
    depth: int = 0,
):
    """Run the protocol on ``G`` instances ``x`` of shape ``(G, n)``.

    Returns ``(X, v)`` with ``X[g, i]`` processor i's reconstructed string and
    ``v[g, i]`` its verification bit.
    """
    x = np.asarray(x, dtype=np.int8)
    G, n = x.shape
    start = ch.rounds
    level = LevelReport(n=n, depth=depth, group_size=0, groups=0, instances=G)
    if report is not None:
        report.levels.append(level)

    if n < params.base_cutoff:
        X = _base_case(ch, x, params)
    else:
        X = _recursive_step(ch, x, params, report, depth, level)

    v, _ = equality_batch(ch, X, params)
    if report is not None:
        truth_ok = (X == x[:, None, :]).all(axis=(1, 2))
        report.verification_false_accepts += int(((v == 1).all(axis=1) & ~truth_ok).sum())
    level.rounds = ch.rounds - start
    return X, v


def _recursive_step(ch, x, params, report, depth, level):
    G, n = x.shape
    part = GroupPartition.for_n(n, params.merge_remainder)
    batches = part.batches
    gid = part.group_of
    starts = part.starts
    NG = starts.size
    level.group_size, level.groups = part.group_size, NG
    idx = np.arange(n)

    # (a) recurse on every group in parallel; each batch holds equal-size groups
    t0 = ch.rounds
    spent = 0
    sub_X, sub_v = [], []
    for first, size, count in batches:
        ch.rounds = t0
        lo = first
        hi = first + size * count
        Xb, vb = learn_batch(ch, x[:, lo:hi].reshape(G * count, size), params, report, depth + 1)
        spent = max(spent, ch.rounds - t0)
        sub_X.append(Xb.reshape(G, count * size, size))
        sub_v.append(vb.reshape(G, count * size))
    ch.rounds = t0 + spent
    rflag = np.concatenate(sub_v, axis=1)
    level.failed_groups = int((np.minimum.reduceat(rflag, starts, axis=1) == 0).sum())

    # (b), (c) publish recursion flags; R[g, r, j] from the flags of j's group
    ok = ch.delivered((G, n, n))
    Rg = _group_flags(ok, rflag, starts)
    R = Rg[:, :, gid]

    # (d) each group transmits the codeword of its learned string, one chunk per member
    codes = [make_code(size) for _, size, _ in batches]
    chunks = [params.chunk_rounds(c.codeword_len, size) for c, (_, size, _) in zip(codes, batches)]
    cws = []
    for c, Xb in zip(codes, sub_X):
        uniq, inv = unique_rows(Xb.reshape(-1, Xb.shape[2]))
        cws.append(c.encode_many(uniq)[inv].reshape(G, Xb.shape[1], c.codeword_len))
    # slot (round, sender) that carries each position of each group codeword
    T = max(chunks)
    sent = np.zeros((G, T, n), dtype=np.int8)
    slots = []
    for (first, size, count), c, cw, chunk in zip(batches, codes, cws, chunks):
        J = np.arange(count)[:, None]
        pos = np.arange(c.codeword_len)[None, :]
        member = J * size + pos // chunk
        t = pos % chunk
        sent[:, t, first + member] = cw[:, member, pos]
        slots.append(t * n + first + member)
    delivered = np.empty((G, T, n, n), dtype=bool)
    for t in range(T):
        delivered[:, t] = ch.delivered((G, n, n))
    delivered = delivered.reshape(G, T * n, n)
    sent = sent.reshape(G, T * n)

    Xnew = np.empty((G, n, n), dtype=np.int8)
    group0 = 0
    for (first, size, count), c, slot in zip(batches, codes, slots):
        dec = _decode_group_words(
            ch, c, sent[:, slot], delivered[:, slot], Rg[:, :, group0 : group0 + count], params
        )
        Xnew[:, :, first : first + size * count] = dec.reshape(G, n, size * count)
        group0 += count
    del delivered

    # (e) helper assignment from each processor's own R
    zero = R == 0
    if ch.transcript is None and not zero.any():
        # nothing to amplify anywhere: steps (f) and (g) cannot change any output
        ch.idle(2 * ch.config.gamma)
        Xnew[:, idx, idx] = x
        return Xnew
    z = zero.sum(axis=2)  # (G, n)
    jth = -(-(idx[None, :] + 1) * z // n)
    cz = np.cumsum(zero, axis=2)
    ell = np.argmax(cz >= np.maximum(jth, 1)[:, :, None], axis=2)

    # (f) everyone transmits its own bit; (g) relay what arrived from ell
    ok = ch.delivered((G, n, n))
    heard = np.take_along_axis(ok, ell[:, None, :], axis=1)[:, 0, :]  # ok[g, ell_i, i]
    relay = np.where(heard & (z > 0), np.take_along_axis(x, ell, axis=1), PASS).astype(np.int8)
    ok = ch.delivered((G, n, n))

    # (h) assemble: own bit, decoded groups, and helper indicators for failed groups
    gi, ti, ri = np.nonzero(ok & (relay[:, :, None] == 1))
    zr = z[gi, ri]
    live = zr > 0
    gi, ti, ri, zr = gi[live], ti[live], ri[live], zr[live]
    helper_set = ((ti + 1) * zr + n - 1) // n
    ones = np.zeros((G, n, n + 1), dtype=bool)
    ones[gi, ri, helper_set] = True
    amplified = np.take_along_axis(ones, cz, axis=2)
    Xnew = np.where(zero, amplified, Xnew).astype(np.int8)
    Xnew[:, idx, idx] = x
    return Xnew


@dataclass
class LearnOutcome:
    X: np.ndarray
    v: np.ndarray
    classification: Classification
    rounds_used: int
    report: RunReport

    @property
    def outputs(self) -> list[tuple[np.ndarray, int]]:
        return [(self.X[i], int(self.v[i])) for i in range(self.X.shape[0])]


def run_base_case(channel, bits, params: ProtocolParams = DEFAULT_PARAMS) -> np.ndarray:
    """Candidate strings after the repeated-broadcast base case (no verification)."""
    ch = as_channel(channel)
    bits = np.asarray(bits, dtype=np.int8)
    if bits.shape[0] >= params.base_cutoff:
        raise ValueError(f"base case needs fewer than {params.base_cutoff} processors")
    return _base_case(ch, bits[None], params)[0]


def run_learn_input(channel, bits, params: ProtocolParams = DEFAULT_PARAMS) -> LearnOutcome:
    ch = as_channel(channel)
    bits = np.asarray(bits, dtype=np.int8)
    if bits.ndim != 1:
        raise ValueError("bits must be one input bit per processor")
    report = RunReport()
    start = ch.rounds
    X, v = learn_batch(ch, bits[None], params, report)
    return LearnOutcome(
        X=X[0],
        v=v[0],
        classification=classify_outcome(bits, X[0], v[0]),
        rounds_used=ch.rounds - start,
        report=report,
    )
