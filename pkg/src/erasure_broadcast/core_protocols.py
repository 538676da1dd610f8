"""Constant-round building blocks: the AND protocol and EqualityTest.

Internal functions take a leading batch axis: ``bits`` of shape ``(G, n)`` is
``G`` independent instances running in lock-step on one channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rows import unique_rows
from .channel import Channel, ChannelConfig
from .codes import CodeSpec, make_code
from .params import DEFAULT_PARAMS, ProtocolParams


def as_channel(channel) -> Channel:
    return Channel(channel) if isinstance(channel, ChannelConfig) else channel


@dataclass
class AndState:
    my_bit: np.ndarray
    seen_zero: np.ndarray
    rounds_total: int = 100

    @property
    def sending_zero(self) -> np.ndarray:
        return (self.my_bit == 0) | self.seen_zero


def and_batch(ch: Channel, bits: np.ndarray, rounds_total: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int8)
    state = AndState(bits, np.zeros(bits.shape, dtype=bool), rounds_total)
    for r in range(rounds_total):
        zero = state.sending_zero
        # all-zero or zero-free instances can no longer change
        if ch.transcript is None and (zero.all(axis=1) | ~zero.any(axis=1)).all():
            ch.idle((rounds_total - r) * ch.config.gamma)
            break
        if ch.transcript is not None:
            rec = ch.broadcast(np.where(zero, 0, 1).astype(np.int8))
            got0 = (rec == 0).any(axis=-2)
        else:
            ok = ch.delivered(bits.shape + bits.shape[-1:])
            got0 = (zero[..., :, None] & ok).any(axis=-2)
        state.seen_zero |= got0
    return (~state.sending_zero).astype(np.int8)


def run_and(channel, bits, rounds_total: int = DEFAULT_PARAMS.and_rounds) -> np.ndarray:
    """Every processor's estimate of the AND of all input bits.

    Each round a processor broadcasts 0 if its bit is 0 or it has ever
    received a 0, else 1; it outputs the AND of its own bit and every bit it
    received.  Uses ``rounds_total`` gamma-wrapped broadcasts.
    """
    ch = as_channel(channel)
    bits = np.asarray(bits, dtype=np.int8)
    if bits.ndim == 1:
        return and_batch(ch, bits[None], rounds_total)[0]
    return and_batch(ch, bits, rounds_total)


def equality_batch(
    ch: Channel,
    strings: np.ndarray,
    params: ProtocolParams = DEFAULT_PARAMS,
    code: CodeSpec | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """EqualityTest on ``strings`` of shape ``(G, n, L)``.

    Returns ``(v, c)``: the AND outputs and each processor's local accept bit.
    """
    strings = np.asarray(strings, dtype=np.int8)
    G, n, L = strings.shape
    code = code or make_code(L)
    Lc = code.codeword_len
    chunk = params.chunk_rounds(Lc, n)
    uniq, inv = unique_rows(strings.reshape(G * n, L))
    inv = inv.reshape(G, n)
    padded = np.zeros((uniq.shape[0], n * chunk), dtype=np.int8)
    padded[:, :Lc] = code.encode_many(uniq)
    vals_t = padded.T  # (positions, u)
    mismatch = np.zeros((G, n), dtype=np.int64)
    for t in range(chunk):
        col = np.arange(n) * chunk + t
        valid = col < Lc
        ok = ch.delivered((G, n, n))  # [g, sender, receiver]
        mismatch += np.count_nonzero(~ok[:, valid, :], axis=1)
        if uniq.shape[0] == 1:
            continue
        own = vals_t[col[valid]][:, inv]  # (senders, G, receivers): receiver's own bit
        sent = own[np.arange(own.shape[0]), :, np.flatnonzero(valid)]  # (senders, G)
        wrong = (own != sent[:, :, None]) & ok[:, valid, :].transpose(1, 0, 2)
        mismatch += np.count_nonzero(wrong, axis=0)
    accept = (mismatch <= params.equality_threshold * Lc).astype(np.int8)
    return and_batch(ch, accept, params.and_rounds), accept


def run_equality_test(
    channel,
    strings,
    params: ProtocolParams = DEFAULT_PARAMS,
    code: CodeSpec | None = None,
) -> np.ndarray:
    """Per-processor verdict (1 = all strings equal) for ``strings[i]`` held by processor i."""
    ch = as_channel(channel)
    strings = np.asarray(strings, dtype=np.int8)
    if strings.ndim != 2:
        raise ValueError("strings must have shape (n, L): one string per processor")
    v, _ = equality_batch(ch, strings[None], params, code)
    return v[0]
