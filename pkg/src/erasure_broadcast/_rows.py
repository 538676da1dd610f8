"""Fast deduplication of the rows of a small-integer matrix."""

from __future__ import annotations

import numpy as np

_WEIGHTS: dict[int, np.ndarray] = {}


def _weights(width: int) -> np.ndarray:
    w = _WEIGHTS.get(width)
    if w is None:
        rng = np.random.Generator(np.random.Philox(width))
        w = 0.5 + 0.5 * rng.random(width)
        _WEIGHTS[width] = w
    return w


def unique_rows(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(uniq, inverse)`` with ``uniq[inverse] == a``; row order is unspecified.

    Rows are bucketed by a random real-weighted sum, and the result is checked
    exactly; on a collision it falls back to ``np.unique(axis=0)``.
    """
    a = np.asarray(a)
    if a.shape[0] == 0:
        return a.copy(), np.zeros(0, dtype=np.int64)
    key = a.astype(np.float64) @ _weights(a.shape[1])
    _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    uniq = a[first]
    if not np.array_equal(uniq[inv], a):
        uniq, inv = np.unique(a, axis=0, return_inverse=True)
    return uniq, inv.reshape(-1)
