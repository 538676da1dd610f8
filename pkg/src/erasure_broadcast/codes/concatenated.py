"""Concatenated binary codes: Reed-Solomon outer code, short binary inner code.

Two constructions are registered:

``rs64-rm32``
    RS over GF(64) with relative distance >= 1/2, inner RM(1,5) [32, 6, 16].
    Expansion ratio tends to 32/3.  Usable while the outer length fits in 63.
``rs4096-golay24``
    RS over GF(4096) with relative distance >= 3/4, inner extended Golay
    [24, 12, 8].  Expansion ratio tends to 8.  Used for long messages.

Either way the designed distance ``(N - k_out + 1) * d_inner`` is at least a
quarter of the codeword length.  Decoding is generalized-minimum-distance
(GMD): nearest inner codewords weighted by reliability, then outer
errors-and-erasures decoding with progressively more unreliable blocks erased.
A candidate is accepted only when ``2 * mismatches + erasures`` against it is
below the designed distance, so a returned message is always the unique one
satisfying that bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .. import kernels
from .inner import BinaryLinearCode, extended_golay, reed_muller_1_5, repetition
from .reed_solomon import ReedSolomon, RSDecodeError

ERASED = -1

# name -> (field bits m, inner code factory)
CONSTRUCTIONS = {
    "rs64-rm32": (6, reed_muller_1_5),
    "rs4096-golay24": (12, extended_golay),
    "rep3": (1, lambda: repetition(3)),
}


class DecodingFailure(ValueError):
    """No codeword lies within the errors-and-erasures radius."""


def _outer_length(k_outer: int, inner: BinaryLinearCode) -> int:
    # least N >= k_outer with (N - k_outer + 1) * d_in >= N * n_in / 4
    N = k_outer
    while 4 * (N - k_outer + 1) * inner.distance < N * inner.n:
        N += 1
    return N


@dataclass(frozen=True)
class CodeSpec:
    construction: str
    k: int
    k_outer: int
    n_outer: int

    @classmethod
    def build(cls, k: int, construction: str | None = None) -> "CodeSpec":
        if k < 1:
            raise ValueError("message length must be positive")
        if construction is None:
            construction = "rs64-rm32" if k <= 6 * 32 else "rs4096-golay24"
        m, factory = CONSTRUCTIONS[construction]
        k_outer = -(-k // m)
        n_outer = _outer_length(k_outer, factory())
        if n_outer > (1 << m) - 1:
            raise ValueError(f"k={k} too long for construction {construction!r}")
        return cls(construction, k, k_outer, n_outer)

    @property
    def m(self) -> int:
        return CONSTRUCTIONS[self.construction][0]

    @cached_property
    def inner(self) -> BinaryLinearCode:
        return CONSTRUCTIONS[self.construction][1]()

    @cached_property
    def outer(self) -> ReedSolomon:
        return ReedSolomon(self.m, self.n_outer, self.k_outer)

    @property
    def padded_k(self) -> int:
        return self.k_outer * self.m

    @property
    def padding(self) -> int:
        return self.padded_k - self.k

    @property
    def codeword_len(self) -> int:
        return self.n_outer * self.inner.n

    @property
    def designed_distance(self) -> int:
        return (self.n_outer - self.k_outer + 1) * self.inner.distance

    @property
    def guaranteed_relative_distance(self) -> Fraction:
        return Fraction(self.designed_distance, self.codeword_len)

    @property
    def K(self) -> Fraction:
        """Expansion ratio codeword_len / k."""
        return Fraction(self.codeword_len, self.k)

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "k": self.k,
            "K": float(self.K),
            "codeword_len": self.codeword_len,
            "k_outer": self.k_outer,
            "n_outer": self.n_outer,
            "designed_distance": self.designed_distance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        spec = cls.build(int(d["k"]), d["construction"])
        if "codeword_len" in d and int(d["codeword_len"]) != spec.codeword_len:
            raise ValueError("codeword_len does not match the construction")
        return spec

    # encoding

    def _to_symbols(self, messages: np.ndarray) -> np.ndarray:
        B = messages.shape[0]
        padded = np.zeros((B, self.padded_k), dtype=np.int64)
        padded[:, : self.k] = messages
        bits = padded.reshape(B, self.k_outer, self.m)
        return (bits << np.arange(self.m)).sum(axis=2)

    def _symbols_to_bits(self, symbols: np.ndarray) -> np.ndarray:
        bits = (symbols[..., None] >> np.arange(self.m)) & 1
        return bits.reshape(*symbols.shape[:-1], -1)[..., : self.k].astype(np.uint8)

    def _expand_inner(self, symbols: np.ndarray) -> np.ndarray:
        packed = self.inner.codebook[symbols]
        bits = (packed[..., None] >> np.arange(self.inner.n, dtype=np.uint64)) & np.uint64(1)
        return bits.reshape(*symbols.shape[:-1], -1).astype(np.uint8)

    def encode_many(self, messages) -> np.ndarray:
        """Encode each row of a ``(B, k)`` bit array."""
        messages = np.asarray(messages, dtype=np.int64)
        if messages.ndim != 2 or messages.shape[1] != self.k:
            raise ValueError(f"expected messages of length {self.k}")
        outer = self.outer.encode_batch(self._to_symbols(messages))
        return self._expand_inner(outer)

    def encode(self, message) -> np.ndarray:
        message = np.asarray(message)
        if message.shape != (self.k,):
            raise ValueError(f"expected a message of {self.k} bits, got shape {message.shape}")
        return self.encode_many(message[None, :])[0]

    def generator_matrix(self) -> np.ndarray:
        return self.encode_many(np.eye(self.k, dtype=np.int64))

    # decoding

    def decode_many(self, received) -> tuple[np.ndarray, np.ndarray]:
        """Decode each row of a ``(B, codeword_len)`` array (``ERASED`` = -1).

        Returns ``(messages, ok)``; rows with ``ok == False`` failed and their
        message row is zero.
        """
        received = np.asarray(received)
        if received.ndim != 2 or received.shape[1] != self.codeword_len:
            raise ValueError(f"expected received words of length {self.codeword_len}")
        B = received.shape[0]
        n_in = self.inner.n
        blocks = received.reshape(B, self.n_outer, n_in)
        present = blocks >= 0
        weights = np.uint64(1) << np.arange(n_in, dtype=np.uint64)
        values = (np.where(present, blocks, 0).astype(np.uint64) * weights).sum(axis=2, dtype=np.uint64)
        masks = (present.astype(np.uint64) * weights).sum(axis=2, dtype=np.uint64)
        sym, mis, tie = kernels.nearest_codewords(values.ravel(), masks.ravel(), self.inner.codebook)
        sym = sym.reshape(B, self.n_outer)
        mis = mis.reshape(B, self.n_outer)
        tie = tie.reshape(B, self.n_outer)
        eras = n_in - present.sum(axis=2)

        D = self.designed_distance
        reenc = self.outer.encode_batch(sym[:, : self.k_outer])
        ok = (
            ~tie.any(axis=1)
            & (reenc == sym).all(axis=1)
            & (2 * mis.sum(axis=1) + eras.sum(axis=1) < D)
        )
        out_sym = np.where(ok[:, None], sym[:, : self.k_outer], 0)
        for b in np.flatnonzero(~ok):
            msg = self._gmd(values[b], masks[b], sym[b], mis[b], eras[b], tie[b])
            if msg is not None:
                out_sym[b] = msg
                ok[b] = True
        return self._symbols_to_bits(out_sym), ok

    def _gmd(self, values, masks, sym, mis, eras, tie):
        d_in = self.inner.distance
        cb = self.inner.codebook
        D = self.designed_distance
        # twice the reliability-weighted distance, capped at d_in
        rho2 = np.minimum(2 * mis + eras, d_in)
        rho2 = np.where(tie, d_in, rho2)
        order = np.argsort(-rho2, kind="stable")
        word = [int(s) for s in sym]
        tried = set()
        for s in range(self.outer.nsym + 1):
            try:
                cw = self.outer.decode(word, order[:s].tolist())
            except RSDecodeError:
                continue
            key = tuple(cw[: self.k_outer])
            if key in tried:
                continue
            tried.add(key)
            cand = cb[np.asarray(cw, dtype=np.int64)]
            total_mis = int(np.bitwise_count((values ^ cand) & masks).sum())
            if 2 * total_mis + int(eras.sum()) < D:
                return np.asarray(key, dtype=np.int64)
        return None


@lru_cache(maxsize=None)
def make_code(k: int, construction: str | None = None) -> CodeSpec:
    return CodeSpec.build(k, construction)


@dataclass
class ReceivedWord:
    """A codeword as seen through the channel: bits with ``ERASED`` marks."""

    symbols: np.ndarray

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int8)
        if np.any((self.symbols < ERASED) | (self.symbols > 1)):
            raise ValueError("symbols must be 0, 1 or ERASED")

    @property
    def erased_count(self) -> int:
        return int((self.symbols == ERASED).sum())

    @classmethod
    def from_codeword(cls, codeword, erased_positions=()) -> "ReceivedWord":
        sym = np.asarray(codeword, dtype=np.int8).copy()
        sym[np.asarray(list(erased_positions), dtype=np.int64)] = ERASED
        return cls(sym)


def encode(spec: CodeSpec, message) -> np.ndarray:
    return spec.encode(message)


def decode_erasure_aware(spec: CodeSpec, received) -> np.ndarray:
    """Decode one received word; raises ``DecodingFailure`` outside the radius."""
    sym = received.symbols if isinstance(received, ReceivedWord) else np.asarray(received)
    if sym.shape != (spec.codeword_len,):
        raise ValueError(f"expected {spec.codeword_len} positions, got {sym.shape}")
    msgs, ok = spec.decode_many(sym[None, :])
    if not ok[0]:
        raise DecodingFailure("no codeword within the decoding radius")
    return msgs[0]


def distance_with_erasures(received, codeword) -> int:
    """Hamming distance where every ERASED position counts as a difference."""
    received = np.asarray(received)
    codeword = np.asarray(codeword)
    return int(((received < 0) | (received != codeword)).sum())


def min_distance_bruteforce(code) -> int:
    """Exact minimum distance of a linear code by enumerating its messages.

    Accepts a ``CodeSpec`` or ``BinaryLinearCode``; refuses ``k > 16``.
    """
    if code.k > 16:
        raise ValueError("brute-force distance is limited to k <= 16")
    if isinstance(code, BinaryLinearCode):
        return code.distance
    msgs = (np.arange(1, 1 << code.k)[:, None] >> np.arange(code.k)) & 1
    best = None
    for lo in range(0, msgs.shape[0], 4096):
        w = code.encode_many(msgs[lo : lo + 4096]).sum(axis=1).min()
        best = w if best is None else min(best, w)
    return int(best)
