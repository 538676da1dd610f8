# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_fallback``; identical semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"
    int popcount64 "__builtin_popcountll"(unsigned long long)


def nearest_codewords(values, masks, codebook):
    cdef const uint64_t[::1] v = np.ascontiguousarray(values, dtype=np.uint64)
    cdef const uint64_t[::1] m = np.ascontiguousarray(masks, dtype=np.uint64)
    cdef const uint64_t[::1] cb = np.ascontiguousarray(codebook, dtype=np.uint64)
    cdef Py_ssize_t B = v.shape[0], C = cb.shape[0], i, j
    best_arr = np.empty(B, dtype=np.int64)
    dist_arr = np.empty(B, dtype=np.int64)
    tie_arr = np.empty(B, dtype=np.bool_)
    cdef int64_t[::1] best = best_arr
    cdef int64_t[::1] dist = dist_arr
    cdef cnp.npy_bool[::1] tie = tie_arr
    cdef int d, dmin, count
    cdef Py_ssize_t arg
    cdef uint64_t vi, mi
    for i in range(B):
        vi = v[i]
        mi = m[i]
        dmin = 65
        arg = 0
        count = 0
        for j in range(C):
            d = popcount64((vi ^ cb[j]) & mi)
            if d < dmin:
                dmin = d
                arg = j
                count = 1
            elif d == dmin:
                count += 1
        best[i] = arg
        dist[i] = dmin
        tie[i] = count > 1
    return best_arr, dist_arr, tie_arr


cdef inline uint64_t mulmod(uint64_t a, uint64_t b, uint64_t q) nogil:
    return <uint64_t>((<u128>a * <u128>b) % <u128>q)


cdef uint64_t powmod(uint64_t a, uint64_t e, uint64_t q) nogil:
    cdef uint64_t r = 1
    a %= q
    while e:
        if e & 1:
            r = mulmod(r, a, q)
        a = mulmod(a, a, q)
        e >>= 1
    return r


def rref_mod_prime(aug, q):
    if q >= (1 << 63) or aug.dtype != np.int64:
        from ._fallback import rref_mod_prime as slow
        return slow(aug, q)
    cdef int64_t[:, ::1] a = aug
    cdef uint64_t Q = q
    cdef Py_ssize_t rows = a.shape[0], width = a.shape[1], cols = width - 1
    cdef Py_ssize_t r = 0, c, i, k, piv
    cdef uint64_t inv, f, x
    pivots = []
    for c in range(cols):
        if r == rows:
            break
        piv = -1
        for i in range(r, rows):
            if a[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for k in range(width):
                a[r, k], a[piv, k] = a[piv, k], a[r, k]
        inv = powmod(<uint64_t>a[r, c], Q - 2, Q)
        for k in range(width):
            a[r, k] = <int64_t>mulmod(<uint64_t>a[r, k], inv, Q)
        for i in range(rows):
            if i != r and a[i, c] != 0:
                f = <uint64_t>a[i, c]
                for k in range(width):
                    x = mulmod(f, <uint64_t>a[r, k], Q)
                    a[i, k] = <int64_t>((<uint64_t>a[i, k] + Q - x) % Q)
        pivots.append(c)
        r += 1
    consistent = True
    for i in range(r, rows):
        if a[i, cols] != 0:
            consistent = False
            break
    return r, np.asarray(pivots, dtype=np.int64), consistent
