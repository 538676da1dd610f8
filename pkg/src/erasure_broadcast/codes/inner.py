"""Short binary linear codes used as inner codes (and as test fixtures)."""

from __future__ import annotations

from functools import cached_property, lru_cache

import numpy as np


class BinaryLinearCode:
    """A binary linear ``[n, k]`` code given by its generator matrix.

    Message ``v`` (an integer, bit ``b`` = message bit ``b``) maps to
    ``codebook[v]``, a packed integer whose bit ``j`` is codeword position ``j``.
    """

    def __init__(self, name: str, generator):
        G = np.asarray(generator, dtype=np.uint8) & 1
        if G.ndim != 2 or G.shape[1] > 64:
            raise ValueError("generator must be a k x n matrix with n <= 64")
        self.name = name
        self.generator = G
        self.k, self.n = G.shape
        msgs = (np.arange(1 << self.k)[:, None] >> np.arange(self.k)) & 1
        words = (msgs @ G) & 1
        self.codebook = (words.astype(np.uint64) << np.arange(self.n, dtype=np.uint64)).sum(
            axis=1, dtype=np.uint64
        )

    def __repr__(self) -> str:
        return f"BinaryLinearCode({self.name!r}, n={self.n}, k={self.k})"

    @cached_property
    def distance(self) -> int:
        return int(np.bitwise_count(self.codebook[1:]).min())

    def encode(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != (self.k,):
            raise ValueError(f"expected {self.k} message bits")
        return ((bits @ self.generator) & 1).astype(np.uint8)


def _reed_muller_1_5() -> np.ndarray:
    pos = np.arange(32)
    rows = [np.ones(32, dtype=np.uint8)]
    rows += [((pos >> j) & 1).astype(np.uint8) for j in range(5)]
    return np.stack(rows)


def _extended_golay() -> np.ndarray:
    g = [1, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1]  # 1 + x^2 + x^4 + x^5 + x^6 + x^10 + x^11
    G = np.zeros((12, 24), dtype=np.uint8)
    for r in range(12):
        G[r, r : r + 12] = g
    G[:, 23] = G[:, :23].sum(axis=1) & 1
    return G


@lru_cache(maxsize=None)
def reed_muller_1_5() -> BinaryLinearCode:
    """First-order Reed-Muller code RM(1, 5): [32, 6, 16]."""
    return BinaryLinearCode("rm(1,5)", _reed_muller_1_5())


@lru_cache(maxsize=None)
def extended_golay() -> BinaryLinearCode:
    """Extended binary Golay code: [24, 12, 8]."""
    return BinaryLinearCode("golay24", _extended_golay())


@lru_cache(maxsize=None)
def repetition(n: int) -> BinaryLinearCode:
    return BinaryLinearCode(f"rep{n}", np.ones((1, n), dtype=np.uint8))
