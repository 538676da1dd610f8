"""Constant-round input learning over a prime-field alphabet.

Processors are split into ``k = floor(6 log2 n)`` contiguous blocks.  After
ten broadcasts of every input, each processor publishes ten random subset
sums of its block's inputs together with the encoded subset.  Everybody then
solves, block by block, the linear system formed by the pairs it received,
over GF(q) with ``q >= n^6`` prime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._rows import unique_rows
from .channel import Channel, ChannelConfig
from .core_protocols import as_channel

# Miller-Rabin with these bases is exact below this bound
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_LIMIT = 3317044064679887385961981

INPUT_ROUNDS = 10
PAIRS = 10


class SimulationInvariantError(RuntimeError):
    """The simulator produced data an honest run cannot produce."""


def is_prime(m: int) -> bool:
    """Deterministic primality test for ``m`` below about 3.3e24."""
    if m < 2:
        return False
    for p in _MR_BASES:
        if m % p == 0:
            return m == p
    if m >= _MR_LIMIT:
        raise ValueError("deterministic primality testing is limited to m < 3.3e24")
    d, s = m - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def smallest_prime_at_least(m: int) -> int:
    if m < 2:
        raise ValueError("m must be at least 2")
    while not is_prime(m):
        m += 1
    return m


def encode_subset(T, k: int) -> int:
    """Bitmask of a subset of ``{1..k}``: bit ``j-1`` set iff ``j`` is in ``T``."""
    mask = 0
    for j in T:
        if not 1 <= j <= k:
            raise ValueError(f"element {j} outside 1..{k}")
        mask |= 1 << (j - 1)
    return mask


def decode_subset(element: int, k: int) -> set[int]:
    if not 0 <= element < (1 << k):
        raise ValueError(f"{element} does not encode a subset of 1..{k}")
    return {j + 1 for j in range(k) if element >> j & 1}


@dataclass(frozen=True)
class FieldConfig:
    q: int

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"q={self.q} is not prime")

    @classmethod
    def for_n(cls, n: int) -> "FieldConfig":
        return cls(smallest_prime_at_least(max(2, n**6)))

    def check(self, n: int) -> None:
        if self.q < n**6:
            raise ValueError(f"q={self.q} is below n^6={n**6}")

    def dtype(self, terms: int = 1):
        """Integer dtype able to hold sums of ``terms`` field elements."""
        return np.int64 if self.q * max(1, terms) < 2**63 else object

    def random(self, rng: np.random.Generator, size: int) -> list[int]:
        """Uniform field elements."""
        if self.q <= 2**63:
            return [int(v) for v in rng.integers(0, self.q, size=size, dtype=np.int64)]
        nbytes = (self.q.bit_length() + 7) // 8
        top = (256**nbytes // self.q) * self.q
        out = []
        while len(out) < size:
            v = int.from_bytes(rng.bytes(nbytes), "little")
            if v < top:
                out.append(v % self.q)
        return out


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous blocks of near-equal size derived from ``k = floor(6 log2 n)``.

    ``layout="size"`` (default) makes blocks of about ``k`` processors, so a
    block's inputs form a ``k``-dimensional unknown and subsets of it are
    subsets of ``[k]``.  ``layout="count"`` instead makes ``k`` blocks of about
    ``n / k`` processors.  Either way there are ``b`` blocks and block ``j`` is
    ``[floor(n j / b), floor(n (j+1) / b))``.
    """

    n: int
    layout: str = "size"

    def __post_init__(self):
        if self.layout not in ("size", "count"):
            raise ValueError("layout must be 'size' or 'count'")

    @property
    def k(self) -> int:
        return max(1, math.floor(6 * math.log2(self.n))) if self.n > 1 else 1

    @property
    def blocks(self) -> int:
        if self.layout == "count":
            return min(self.k, self.n)
        return -(-self.n // self.k)

    @property
    def bounds(self) -> np.ndarray:
        b = self.blocks
        return np.array([self.n * j // b for j in range(b + 1)], dtype=np.int64)

    @property
    def block_of(self) -> np.ndarray:
        return np.searchsorted(self.bounds, np.arange(self.n), side="right") - 1

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.bounds)

    def ranges(self) -> list[range]:
        b = self.bounds
        return [range(int(b[j]), int(b[j + 1])) for j in range(self.blocks)]


@dataclass(frozen=True)
class EquationPair:
    sum: int
    mask: int


def _back_substitute(aug: np.ndarray, rank: int, pivots, size: int, field: FieldConfig, rng):
    free = [c for c in range(size) if c not in set(int(p) for p in pivots)]
    sol = [0] * size
    vals = field.random(rng, len(free)) if free else []
    for c, v in zip(free, vals):
        sol[c] = v
    q = field.q
    for r in range(rank):
        p = int(pivots[r])
        acc = int(aug[r, size])
        for c in free:
            acc -= int(aug[r, c]) * sol[c]
        sol[p] = acc % q
    return sol


def _reduce(rows, field: FieldConfig, head: int = 16):
    """Row-reduce ``rows``; returns ``(aug, rank, pivots)``.

    Random systems usually reach full column rank within a few rows beyond the
    column count, so those are reduced first and the remaining rows are only
    checked for consistency against the resulting unique solution.
    """
    cols = len(rows[0]) - 1
    rows = np.asarray(rows, dtype=field.dtype(cols + 1))
    m = cols + head
    if rows.shape[0] > m:
        aug = rows[:m].copy()
        rank, pivots, consistent = kernels.rref_mod_prime(aug, field.q)
        if consistent and rank == cols:
            sol = aug[:cols, cols]
            rest = rows[m:]
            if np.all((rest[:, :cols] * sol).sum(axis=1) % field.q == rest[:, cols] % field.q):
                return aug, rank, pivots
            raise SimulationInvariantError("received equations are inconsistent")
    aug = rows.copy()
    rank, pivots, consistent = kernels.rref_mod_prime(aug, field.q)
    if not consistent:
        raise SimulationInvariantError("received equations are inconsistent")
    return aug, rank, pivots


def solve_block_system(equations, block_size: int, field, rng) -> tuple[list[int], bool]:
    """Solve ``<mask, y> = sum`` over GF(q); free variables are uniform.

    Returns ``(solution, unique)``.
    """
    if isinstance(field, int):
        field = FieldConfig(field)
    rows = []
    for eq in equations:
        if not 0 <= eq.mask < (1 << block_size):
            raise ValueError(f"mask {eq.mask} exceeds block size {block_size}")
        rows.append([(eq.mask >> c) & 1 for c in range(block_size)] + [eq.sum % field.q])
    if not rows:
        return field.random(rng, block_size), block_size == 0
    aug, rank, pivots = _reduce(rows, field)
    return _back_substitute(aug, rank, pivots, block_size, field, rng), rank == block_size


@dataclass
class LargeAlphabetOutcome:
    X: np.ndarray  # (n, n) candidate inputs per processor
    unique: np.ndarray  # (n, blocks) block solved uniquely
    masks: np.ndarray  # (PAIRS, n) transmitted subset encodings
    sums: np.ndarray  # (PAIRS, n) transmitted subset sums
    rounds_used: int
    inclusion_probability: float

    @property
    def solved(self) -> np.ndarray:
        return self.unique.all(axis=1)

    def all_correct(self, inputs) -> bool:
        inputs = np.asarray(inputs, dtype=self.X.dtype)
        return bool((self.X == inputs[None, :]).all())


def run_large_alphabet(channel, field: FieldConfig, inputs, layout: str = "size") -> LargeAlphabetOutcome:
    """Every processor's estimate of all inputs.

    All 30 broadcasts are gamma-wrapped, so the run takes ``30 * gamma``
    physical rounds; the inclusion probability uses the wrapped erasure
    probability ``p ** gamma``, which must not exceed 1/2.
    """
    ch = as_channel(channel)
    cfg = ch.config
    n = cfg.n
    part = BlockPartition(n, layout)
    smax = int(part.sizes.max())
    dt = field.dtype(smax + 1)
    x = np.array([int(v) for v in inputs], dtype=dt)
    if x.shape != (n,):
        raise ValueError(f"expected {n} inputs")
    if any(not 0 <= int(v) < field.q for v in x):
        raise ValueError("inputs must lie in [0, q)")
    p_eff = cfg.p_eff
    if p_eff > 0.5:
        raise ValueError("wrapped erasure probability above 1/2; raise gamma")
    incl = 1.0 / (2.0 * (1.0 - p_eff))
    start = ch.rounds
    rng = ch.rng

    blk = part.block_of
    first = part.bounds[blk]  # first member of each processor's block
    size = part.sizes[blk]
    idx = np.arange(n)

    # step 2: inputs, ten wrapped broadcasts
    heard = np.stack([ch.delivered((n, n)) for _ in range(INPUT_ROUNDS)])  # [t, s, r]

    # step 3: subsets of one's own block; offset o is member first + o
    offs = np.arange(smax)
    member = first[:, None] + offs[None, :]  # (n, smax)
    valid = offs[None, :] < size[:, None]
    member_c = np.where(valid, member, idx[:, None])
    u = rng.random((PAIRS, n, smax))
    got = heard[:, member_c, idx[:, None]]  # (t, i, o): i heard member o in round t
    is_self = member_c == idx[:, None]
    chosen = valid & np.where(is_self, u < 0.5, got & (u < incl))
    if smax <= 62:
        masks = (chosen.astype(np.int64) << offs).sum(axis=2)  # (t, i)
    else:
        masks = np.array(
            [[sum(1 << int(o) for o in np.flatnonzero(row)) for row in rows] for rows in chosen],
            dtype=object,
        )
    if dt is object:
        sums = np.empty((PAIRS, n), dtype=object)
        for t in range(PAIRS):
            for i in range(n):
                sums[t, i] = sum(int(x[m]) for m in member[i][chosen[t, i]]) % field.q
    else:
        sums = np.where(chosen, x[member_c][None], 0).sum(axis=2) % field.q

    # step 4: pair t occupies two wrapped broadcasts; half pairs are discarded
    recv = np.stack([ch.delivered((n, n)) & ch.delivered((n, n)) for _ in range(PAIRS)])

    # step 5: per block, solve each receiver's system; identical systems share work
    X = np.empty((n, n), dtype=dt)
    unique = np.zeros((n, part.blocks), dtype=bool)
    for j, rg in enumerate(part.ranges()):
        s = len(rg)
        senders = np.arange(rg.start, rg.stop)
        pattern = recv[:, senders, :].reshape(PAIRS * s, n).T  # (n_r, pairs)
        own = np.where(blk == j, idx - rg.start, -1)  # receiver's own offset
        key = np.concatenate([pattern.astype(np.int64), own[:, None]], axis=1)
        uniq, inv = unique_rows(key)
        # one row per (pair, sender): subset bits, then the subset sum
        eq = np.zeros((PAIRS * s, s + 1), dtype=dt)
        eq[:, :s] = chosen[:, senders, :s].reshape(PAIRS * s, s)
        eq[:, s] = sums[:, senders].reshape(-1)
        for ui in range(uniq.shape[0]):
            receivers = np.flatnonzero(inv == ui)
            rows = eq[uniq[ui, :-1].astype(bool)]
            o = int(uniq[ui, -1])
            if o >= 0:
                own_row = np.zeros((1, s + 1), dtype=dt)
                own_row[0, o] = 1
                own_row[0, s] = x[rg.start + o]
                rows = np.concatenate([rows, own_row])
            if len(rows):
                aug, rank, pivots = _reduce(rows, field)
            else:
                aug, rank, pivots = None, 0, []
            for r in receivers:
                if rank == s:
                    X[r, rg.start : rg.stop] = aug[:s, s]
                    unique[r, j] = True
                else:
                    if aug is None:
                        sol = field.random(rng, s)
                    else:
                        sol = _back_substitute(aug, rank, pivots, s, field, rng)
                    X[r, rg.start : rg.stop] = np.array(sol, dtype=dt)
    return LargeAlphabetOutcome(
        X=X,
        unique=unique,
        masks=masks,
        sums=sums,
        rounds_used=ch.rounds - start,
        inclusion_probability=incl,
    )
