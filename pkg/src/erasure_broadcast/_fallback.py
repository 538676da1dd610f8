"""Pure-Python/numpy implementations of the hot kernels.

These define the reference semantics; the compiled ``_ext`` module must agree
with them exactly.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 14


def nearest_codewords(values, masks, codebook):
    """Nearest codeword of each masked word, by mismatches on unmasked bits.

    Returns ``(best, mismatches, tie)``: index of the first codeword at minimum
    distance, that distance, and whether a second codeword attains it.
    """
    values = np.ascontiguousarray(values, dtype=np.uint64)
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    codebook = np.ascontiguousarray(codebook, dtype=np.uint64)
    B = values.shape[0]
    best = np.empty(B, dtype=np.int64)
    dist = np.empty(B, dtype=np.int64)
    tie = np.empty(B, dtype=bool)
    for lo in range(0, B, _CHUNK):
        hi = min(B, lo + _CHUNK)
        d = np.bitwise_count((values[lo:hi, None] ^ codebook[None, :]) & masks[lo:hi, None])
        idx = np.argmin(d, axis=1)
        dmin = d[np.arange(hi - lo), idx]
        best[lo:hi] = idx
        dist[lo:hi] = dmin
        tie[lo:hi] = (d == dmin[:, None]).sum(axis=1) > 1
    return best, dist, tie


def rref_mod_prime(aug, q):
    """Reduce the augmented matrix ``aug`` (rows x (cols + 1)) in place.

    Entries must lie in ``[0, q)`` with ``q`` prime; use an object array when
    ``q`` does not fit in 63 bits.  Returns
    ``(rank, pivot_columns, consistent)``; the first ``rank`` rows hold the
    reduced system with unit pivots.
    """
    rows, width = aug.shape
    cols = width - 1
    a = [[int(v) for v in row] for row in aug]
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = next((i for i in range(r, rows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], q - 2, q)
        a[r] = [(v * inv) % q for v in a[r]]
        for i in range(rows):
            if i != r and a[i][c]:
                f = a[i][c]
                ai, ar = a[i], a[r]
                a[i] = [(x - f * y) % q for x, y in zip(ai, ar)]
        pivots.append(c)
        r += 1
    consistent = all(a[i][cols] == 0 for i in range(r, rows))
    if rows:
        aug[:, :] = np.asarray(a, dtype=aug.dtype)
    return r, np.asarray(pivots, dtype=np.int64), consistent
