"""Systematic Reed-Solomon codes over GF(2^m) with errors-and-erasures decoding.

Codeword index ``i`` carries the coefficient of ``x^(n-1-i)``; the first ``k``
symbols are the message.  The generator polynomial has roots
``alpha^0 .. alpha^(n-k-1)``.  Decoding follows the usual pipeline: syndromes,
erasure locator, Forney-modified syndromes, Berlekamp-Massey, Chien search
and Forney's formula.
"""

from __future__ import annotations

import numpy as np

from .gf import GF2m, field


class RSDecodeError(ValueError):
    """Raised when a received word is outside the errors-and-erasures radius."""


def _eval_low(gf: GF2m, p: list[int], x: int) -> int:
    # lowest-degree-first Horner
    y = 0
    for c in reversed(p):
        y = gf.mul(y, x) ^ c
    return y


def _mul_low(gf: GF2m, p: list[int], q: list[int], trunc: int | None = None) -> list[int]:
    size = len(p) + len(q) - 1
    if trunc is not None:
        size = min(size, trunc)
    out = [0] * size
    for i, a in enumerate(p):
        if a == 0 or i >= size:
            continue
        for j, b in enumerate(q):
            if i + j >= size:
                break
            out[i + j] ^= gf.mul(a, b)
    return out


def berlekamp_massey(gf: GF2m, seq: list[int]) -> tuple[list[int], int]:
    """Shortest LFSR (connection polynomial, lowest degree first) for ``seq``."""
    C = [1]
    B = [1]
    L = 0
    shift = 1
    b = 1
    for r, s_r in enumerate(seq):
        d = s_r
        for i in range(1, L + 1):
            if i < len(C):
                d ^= gf.mul(C[i], seq[r - i])
        if d == 0:
            shift += 1
            continue
        coef = gf.div(d, b)
        new_c = C + [0] * max(0, len(B) + shift - len(C))
        for i, b_i in enumerate(B):
            new_c[i + shift] ^= gf.mul(coef, b_i)
        if 2 * L <= r:
            B = C
            L = r + 1 - L
            b = d
            shift = 1
        else:
            shift += 1
        C = new_c
    while len(C) > 1 and C[-1] == 0:
        C.pop()
    return C, L


class ReedSolomon:
    """RS[n, k] over GF(2^m), shortened from length 2^m - 1 when n is smaller."""

    def __init__(self, m: int, n: int, k: int):
        gf = field(m)
        if not 1 <= k <= n <= gf.order - 1:
            raise ValueError(f"invalid RS parameters n={n}, k={k} over GF(2^{m})")
        self.gf = gf
        self.m = m
        self.n = n
        self.k = k
        self.nsym = n - k
        gen = [1]
        for j in range(self.nsym):
            gen = gf.poly_mul(gen, [1, gf.alpha_pow(j)])
        self.generator = gen
        self._gen_tail = np.asarray(gen[1:], dtype=np.int64)
        # degree of each codeword index, and alpha^degree
        self._locators = [gf.alpha_pow(n - 1 - i) for i in range(n)]

    @property
    def distance(self) -> int:
        return self.nsym + 1

    def __repr__(self) -> str:
        return f"ReedSolomon(m={self.m}, n={self.n}, k={self.k})"

    def encode(self, msg) -> list[int]:
        msg = [int(v) for v in msg]
        if len(msg) != self.k:
            raise ValueError(f"expected {self.k} message symbols, got {len(msg)}")
        gf = self.gf
        gen = self.generator
        reg = [0] * self.nsym
        for sym in msg:
            fb = sym ^ (reg[0] if reg else 0)
            reg = reg[1:] + [0] if reg else reg
            if fb:
                for t in range(self.nsym):
                    reg[t] ^= gf.mul(fb, gen[t + 1])
        return msg + reg

    def encode_batch(self, msgs: np.ndarray) -> np.ndarray:
        """Encode every row of a ``(B, k)`` symbol array."""
        msgs = np.asarray(msgs, dtype=np.int64)
        if msgs.ndim != 2 or msgs.shape[1] != self.k:
            raise ValueError(f"expected shape (B, {self.k}), got {msgs.shape}")
        reg = np.zeros((msgs.shape[0], self.nsym), dtype=np.int64)
        if self.nsym:
            for j in range(self.k):
                fb = msgs[:, j] ^ reg[:, 0]
                reg[:, :-1] = reg[:, 1:]
                reg[:, -1] = 0
                reg ^= self.gf.vmul(fb[:, None], self._gen_tail[None, :])
        return np.concatenate([msgs, reg], axis=1)

    def syndromes(self, word) -> list[int]:
        gf = self.gf
        return [gf.poly_eval(word, gf.alpha_pow(j)) for j in range(self.nsym)]

    def decode(self, word, erasures=()) -> list[int]:
        """Return the corrected codeword.

        ``erasures`` lists codeword indices whose symbols are unknown; their
        values in ``word`` are ignored.  Succeeds whenever ``2e + s <= n - k``
        for ``e`` symbol errors and ``s`` erasures.
        """
        gf = self.gf
        word = [int(v) for v in word]
        if len(word) != self.n:
            raise ValueError(f"expected {self.n} symbols, got {len(word)}")
        erasures = sorted(set(int(e) for e in erasures))
        if len(erasures) > self.nsym:
            raise RSDecodeError("too many erasures")
        for e in erasures:
            word[e] = 0
        synd = self.syndromes(word)
        if not any(synd):
            return word

        gamma = [1]
        for e in erasures:
            gamma = _mul_low(gf, gamma, [1, self._locators[e]])
        s = len(erasures)
        forney = _mul_low(gf, synd, gamma, trunc=self.nsym)
        lam, n_err = berlekamp_massey(gf, forney[s:])
        if 2 * n_err + s > self.nsym:
            raise RSDecodeError("error count exceeds the decoding radius")
        psi = _mul_low(gf, lam, gamma)
        while len(psi) > 1 and psi[-1] == 0:
            psi.pop()

        positions = []
        for i, X in enumerate(self._locators):
            if _eval_low(gf, psi, gf.inv(X)) == 0:
                positions.append(i)
        if len(positions) != len(psi) - 1:
            raise RSDecodeError("locator roots do not match its degree")

        omega = _mul_low(gf, synd, psi, trunc=self.nsym)
        dpsi = [psi[j + 1] if (j + 1) % 2 == 1 else 0 for j in range(len(psi) - 1)]
        for i in positions:
            X = self._locators[i]
            Xinv = gf.inv(X)
            denom = _eval_low(gf, dpsi, Xinv)
            if denom == 0:
                raise RSDecodeError("zero derivative at locator root")
            word[i] ^= gf.mul(X, gf.div(_eval_low(gf, omega, Xinv), denom))
        if any(self.syndromes(word)):
            raise RSDecodeError("correction did not yield a codeword")
        return word
