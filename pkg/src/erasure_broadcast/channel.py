"""The synchronous broadcast channel with independent per-pair erasures.

Every round each processor broadcasts one symbol; each ordered pair
``(sender, receiver)`` with ``sender != receiver`` independently loses the
symbol with probability ``p``.  Received grids are integer arrays indexed
``[..., sender, receiver]`` holding the sent symbol or ``ERASED`` (-1).  A
processor always hears itself.

Randomness comes from a Philox (counter-based) generator seeded through
``numpy.random.SeedSequence``; independent substreams are derived from a master
seed plus integer keys.  Erasures for one physical round over an ``n x n`` grid
consume ``n * n`` raw 64-bit outputs in row-major (sender-major) order,
diagonal included; a pair is erased iff its raw value is below
``round(p * 2**64)``.  With ``p == 0`` no draws are made.

By default a gamma-fold repetition is simulated with a single draw at
erasure probability ``p ** gamma`` (the exact law of the merged reception).
``physical=True`` draws and merges every physical round instead, which is what
transcript recording and erasure hooks use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

ERASED = -1


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChannelConfig:
    n: int
    p: float
    gamma: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("erasure probability must satisfy 0 <= p < 1")
        if self.gamma < 1:
            raise ValueError("gamma must be a positive integer")

    @property
    def p_eff(self) -> float:
        """Per-pair erasure probability of one gamma-repeated broadcast."""
        return self.p**self.gamma


def required_gamma(p: float, target: float) -> int:
    """Least gamma with ``p ** gamma <= target``."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must satisfy 0 <= p < 1")
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in (0, 1)")
    gamma = 1
    while p**gamma > target * (1 + 1e-12):
        gamma += 1
    return gamma


@dataclass
class ReceptionGrid:
    """What every receiver got in one round: ``entries[sender, receiver]``."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[-1]

    def erased(self) -> np.ndarray:
        return self.entries == ERASED


@dataclass
class Transcript:
    rounds: list[np.ndarray] = field(default_factory=list)

    @property
    def round_count(self) -> int:
        return len(self.rounds)

    def lines(self) -> Iterable[str]:
        yield "round,sender,receiver,symbol"
        for r, grid in enumerate(self.rounds):
            n = grid.shape[0]
            for s in range(n):
                for t in range(n):
                    v = int(grid[s, t])
                    yield f"{r},{s},{t},{'?' if v == ERASED else v}"

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            for line in self.lines():
                fh.write(line + "\n")


def merge_receptions(grids) -> np.ndarray:
    """Merge repeated receptions of the same broadcast.

    An entry keeps the sent symbol if any copy arrived, else stays ERASED.
    """
    grids = np.asarray(grids)
    arrived = grids != ERASED
    any_arrived = arrived.any(axis=0)
    first = np.argmax(arrived, axis=0)
    vals = np.take_along_axis(grids, first[None], axis=0)[0]
    return np.where(any_arrived, vals, ERASED)


ErasureHook = Callable[[int, tuple], np.ndarray]


class Channel:
    """Stateful channel: owns the generator and the global round counter.

    ``erasure_hook(round_index, shape)`` may replace the random erasures of a
    physical round with a fixed boolean pattern (True = erased); it implies
    physical simulation.
    """

    def __init__(
        self,
        config: ChannelConfig,
        rng: np.random.Generator | None = None,
        *,
        physical: bool = False,
        record: bool = False,
        erasure_hook: ErasureHook | None = None,
    ):
        self.config = config
        self.rng = rng if rng is not None else stream(config.seed)
        self.physical = physical or erasure_hook is not None
        self.erasure_hook = erasure_hook
        self.transcript = Transcript() if record else None
        self.rounds = 0

    def __repr__(self) -> str:
        return f"Channel({self.config}, rounds={self.rounds})"

    def _erased(self, shape: tuple, prob: float) -> np.ndarray:
        thr = int(round(prob * 2.0**64))
        if thr <= 0:
            erased = np.zeros(shape, dtype=bool)
        else:
            raw = self.rng.bit_generator.random_raw(int(np.prod(shape)))
            erased = (raw < np.uint64(min(thr, 2**64 - 1))).reshape(shape)
        n = shape[-1]
        erased[..., np.arange(n), np.arange(n)] = False
        return erased

    def _physical_erased(self, shape: tuple) -> np.ndarray:
        if self.erasure_hook is not None:
            erased = np.array(self.erasure_hook(self.rounds, shape), dtype=bool)
            erased = np.broadcast_to(erased, shape).copy()
            n = shape[-1]
            erased[..., np.arange(n), np.arange(n)] = False
        else:
            erased = self._erased(shape, self.config.p)
        return erased

    def delivered(self, shape: tuple, repeats: int = 1, gamma: int | None = None) -> np.ndarray:
        """Delivery mask ``[..., sender, receiver]`` for ``repeats`` gamma-wrapped broadcasts
        of an unchanging message; advances the round counter by ``repeats * gamma``."""
        g = self.config.gamma if gamma is None else gamma
        count = repeats * g
        if count < 1:
            raise ValueError("need at least one physical round")
        shape = tuple(shape)
        if shape[-1] != shape[-2]:
            raise ValueError("delivery grids are square")
        if self.physical:
            ok = np.zeros(shape, dtype=bool)
            for _ in range(count):
                ok |= ~self._physical_erased(shape)
                self.rounds += 1
            return ok
        erased = self._erased(shape, self.config.p**count)
        self.rounds += count
        return ~erased

    def broadcast(self, sent, repeats: int = 1, gamma: int | None = None) -> np.ndarray:
        """Received grid(s) for ``sent`` of shape ``(..., m)``."""
        sent = np.asarray(sent)
        if sent.dtype.kind != "i":
            sent = sent.astype(np.int64)
        if np.any(sent == ERASED):
            raise ValueError("cannot broadcast the ERASED mark")
        shape = sent.shape + sent.shape[-1:]
        g = self.config.gamma if gamma is None else gamma
        if self.transcript is not None and self.physical and sent.size == sent.shape[-1]:
            flat = sent.reshape(-1)
            merged = []
            for _ in range(repeats * g):
                erased = self._physical_erased(shape[-2:])
                grid = np.where(erased, ERASED, flat[:, None]).astype(np.int64)
                self.transcript.rounds.append(grid)
                merged.append(grid)
                self.rounds += 1
            return merge_receptions(merged).reshape(shape)
        ok = self.delivered(shape, repeats, g)
        return np.where(ok, sent[..., :, None], np.asarray(ERASED, dtype=sent.dtype))

    def delivery_counts(self, shape: tuple, rounds: int) -> np.ndarray:
        """Per-pair number of successful deliveries over ``rounds`` physical rounds
        (no gamma wrapping)."""
        shape = tuple(shape)
        n = shape[-1]
        if self.physical:
            counts = np.zeros(shape, dtype=np.int64)
            for _ in range(rounds):
                counts += ~self._physical_erased(shape)
                self.rounds += 1
            return counts
        if self.config.p == 0:
            counts = np.full(shape, rounds, dtype=np.int64)
        else:
            counts = self.rng.binomial(rounds, 1.0 - self.config.p, size=shape).astype(np.int64)
        counts[..., np.arange(n), np.arange(n)] = rounds
        self.rounds += rounds
        return counts

    def idle(self, rounds: int) -> None:
        """Advance the clock without drawing (rounds whose outcome is already fixed)."""
        self.rounds += rounds


def broadcast_round(config: ChannelConfig, sent, rng: np.random.Generator) -> ReceptionGrid:
    """One physical round."""
    return ReceptionGrid(Channel(config, rng).broadcast(np.asarray(sent), gamma=1))


def broadcast_with_repetition(config: ChannelConfig, sent, rng: np.random.Generator, *, physical: bool = False) -> ReceptionGrid:
    """``config.gamma`` physical rounds of the same vector, merged."""
    return ReceptionGrid(Channel(config, rng, physical=physical).broadcast(np.asarray(sent)))
