"""Arithmetic in the binary extension fields GF(2^m) via log/antilog tables."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Primitive polynomials, bit i <-> coefficient of x^i.
PRIMITIVE_POLYS = {
    1: 0b11,
    6: 0b1000011,  # x^6 + x + 1
    12: 0b1000001010011,  # x^12 + x^6 + x^4 + x + 1
}


class GF2m:
    """The field GF(2^m) with generator alpha = x.

    Elements are integers in ``[0, 2^m)``; addition is XOR.  Scalar methods
    work on Python ints, the ``v*`` methods on numpy integer arrays.
    """

    def __init__(self, m: int):
        if m not in PRIMITIVE_POLYS:
            raise ValueError(f"no primitive polynomial registered for m={m}")
        self.m = m
        self.order = 1 << m
        self.poly = PRIMITIVE_POLYS[m]
        q1 = self.order - 1
        exp = np.zeros(2 * q1 + 1, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(q1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= self.poly
        exp[q1 : 2 * q1] = exp[:q1]
        exp[2 * q1] = exp[0]
        self.exp = exp
        self.log = log
        self._exp = exp.tolist()
        self._log = log.tolist()

    def __repr__(self) -> str:
        return f"GF2m(m={self.m})"

    def alpha_pow(self, e: int) -> int:
        return self._exp[e % (self.order - 1)]

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero in GF(2^m)")
        if a == 0:
            return 0
        return self._exp[(self._log[a] - self._log[b]) % (self.order - 1)]

    def inv(self, a: int) -> int:
        return self.div(1, a)

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return self._exp[(self._log[a] * e) % (self.order - 1)]

    def vmul(self, a: np.ndarray, b) -> np.ndarray:
        """Elementwise product of arrays (or array and scalar)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self.exp[self.log[a] + self.log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    # polynomials are lists of coefficients, highest degree first

    def poly_mul(self, p: list[int], q: list[int]) -> list[int]:
        out = [0] * (len(p) + len(q) - 1)
        for i, a in enumerate(p):
            if a == 0:
                continue
            for j, b in enumerate(q):
                out[i + j] ^= self.mul(a, b)
        return out

    def poly_eval(self, p: list[int], x: int) -> int:
        y = 0
        for c in p:
            y = self.mul(y, x) ^ c
        return y


@lru_cache(maxsize=None)
def field(m: int) -> GF2m:
    return GF2m(m)
