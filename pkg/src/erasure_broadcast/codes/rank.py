"""Rank of random 0/1 matrices over a prime field."""

from __future__ import annotations

import numpy as np

from .. import kernels


def column_rank_mod_prime(matrix, q: int) -> int:
    a = np.zeros((matrix.shape[0], matrix.shape[1] + 1), dtype=np.int64)
    a[:, :-1] = np.asarray(matrix, dtype=np.int64) % q
    rank, _, _ = kernels.rref_mod_prime(a, q)
    return rank


def random_binary_matrix_rank(k: int, rows: int, q: int, rng, matrix=None) -> bool:
    """Sample a ``rows x k`` matrix of fair bits; True iff it has rank ``k`` mod ``q``.

    ``matrix`` bypasses sampling (test hook).
    """
    if rows < k:
        raise ValueError("need rows >= k")
    if matrix is None:
        matrix = rng.integers(0, 2, size=(rows, k), dtype=np.int64)
    return column_rank_mod_prime(np.asarray(matrix), q) == k
