"""Compare the compiled kernels with the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from erasure_broadcast import _fallback
from erasure_broadcast.codes import extended_golay
from erasure_broadcast.large_alphabet import FieldConfig

try:
    from erasure_broadcast import _ext
except ImportError:  # extension not built
    _ext = None


def nearest_case(rng, batch=20000):
    book = extended_golay().codebook
    idx = rng.integers(0, book.shape[0], batch)
    # sparse noise: AND of three uniform words flips each bit w.p. 1/8
    noise = np.bitwise_and.reduce(rng.integers(0, 1 << 24, (3, batch), dtype=np.uint64), axis=0)
    values = book[idx] ^ noise
    masks = np.full(batch, (1 << 24) - 1, dtype=np.uint64)
    return lambda mod: mod.nearest_codewords(values, masks, book)


def rref_case(rng, k=24, rows=60):
    q = FieldConfig.for_n(64).q
    base = rng.integers(0, q, size=(rows, k + 1), dtype=np.int64)
    return lambda mod: mod.rref_mod_prime(base.copy(), q)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    cases = {
        "nearest_codewords (20000 words, Golay 24)": nearest_case(rng),
        "rref_mod_prime (60 x 25, q ~ 2^36)": rref_case(rng),
    }
    print(f"{'kernel':45s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for name, fn in cases.items():
        py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        if _ext is None:
            print(f"{name:45s} {py:10.4f} {'n/a':>11s} {'n/a':>8s}")
            continue
        for a, b in zip(fn(_fallback), fn(_ext)):
            assert np.array_equal(np.asarray(a), np.asarray(b)), f"{name}: backends disagree"
        cx = min(timeit.repeat(lambda: fn(_ext), number=1, repeat=args.repeat))
        print(f"{name:45s} {py:10.4f} {cx:11.4f} {py / cx:7.1f}x")


if __name__ == "__main__":
    main()
