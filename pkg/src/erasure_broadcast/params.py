"""Protocol constants shared by the bit-alphabet protocols."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ProtocolParams:
    and_rounds: int = 100
    # EqualityTest accepts when at most this fraction of the codeword differs
    equality_threshold: float = 0.06
    # decode a group codeword only if this fraction of it arrived
    decode_fraction: float = 0.88
    base_rounds: int = 100
    # LearnInput uses the base case below this many processors
    base_cutoff: int = 100
    # leftover processors join the last full group instead of forming a short one
    merge_remainder: bool = True
    # rounds per processor for one collective codeword transmission; 11 is
    # ceil(32/3), the largest expansion ratio of the default codes
    code_rounds: int = 11

    def chunk_rounds(self, codeword_len: int, senders: int) -> int:
        """Rounds (bits per sender) to transmit a codeword split across ``senders``."""
        return max(self.code_rounds, -(-codeword_len // senders))


DEFAULT_PARAMS = ProtocolParams()
