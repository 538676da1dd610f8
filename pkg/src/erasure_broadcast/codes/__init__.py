"""Error-correcting codes: concatenated RS/inner codes and rank utilities."""

from .concatenated import (
    CONSTRUCTIONS,
    ERASED,
    CodeSpec,
    DecodingFailure,
    ReceivedWord,
    decode_erasure_aware,
    distance_with_erasures,
    encode,
    make_code,
    min_distance_bruteforce,
)
from .inner import BinaryLinearCode, extended_golay, reed_muller_1_5, repetition
from .rank import column_rank_mod_prime, random_binary_matrix_rank
from .reed_solomon import ReedSolomon, RSDecodeError

__all__ = [
    "CONSTRUCTIONS",
    "ERASED",
    "BinaryLinearCode",
    "CodeSpec",
    "DecodingFailure",
    "RSDecodeError",
    "ReceivedWord",
    "ReedSolomon",
    "column_rank_mod_prime",
    "decode_erasure_aware",
    "distance_with_erasures",
    "encode",
    "extended_golay",
    "make_code",
    "min_distance_bruteforce",
    "random_binary_matrix_rank",
    "reed_muller_1_5",
    "repetition",
]
