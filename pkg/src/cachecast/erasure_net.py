"""Packet-erasure broadcast channel plus the codes run over it.

A transmission is ``n_slots`` packets of ``packet_bits`` each; every
receiver independently erases each slot with its own probability and keeps
the rest (with slot indices, so decoders know which coded packets arrived).

Two code families are provided:

* random linear codes (:func:`rlc_encode` / :func:`rlc_decode`), which
  deliver one message and can exploit a known prefix of it, and
* piggyback codes (:func:`piggyback_encode`), which jointly encode a fresh
  message ``w1`` with a second message ``w2``; receivers that already hold
  ``w2`` decode ``w1`` from roughly ``k1`` packets via
  :func:`piggyback_decode_with_side_info`, while receivers without side
  information recover both messages from roughly ``k1 + k2`` packets via
  :func:`piggyback_decode_full`.

Both families use banded generator matrices so decoding stays near-linear
in the message size; piggyback sources are interleaved proportionally so
the side-information columns are spread evenly across the band.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ._bitops import bits_to_packets, packets_to_bits
from ._codes import LinearCode, spread_permutation

__all__ = [
    "ChannelOutput",
    "DecodeResult",
    "PiggybackFullResult",
    "PiggybackParams",
    "RlcParams",
    "piggyback_decode_full",
    "piggyback_decode_with_side_info",
    "piggyback_encode",
    "read_trials",
    "rlc_decode",
    "rlc_encode",
    "transmit",
    "write_trials",
]

_CRC_BITS = 32
_PIGGYBACK_BAND_MAX = 4096


@dataclass(frozen=True)
class ChannelOutput:
    """What one receiver sees: surviving slot indices and their packets."""

    receiver: int
    received_slots: np.ndarray
    packets: np.ndarray


def transmit(packets: np.ndarray, deltas: Sequence[float], seed: int) -> list[ChannelOutput]:
    """Broadcast ``packets`` to one receiver per erasure probability.

    Slot erasures are independent across slots and receivers; a single
    seeded generator makes the outcome reproducible.
    """
    packets = np.ascontiguousarray(packets, dtype=np.uint8)
    if packets.ndim != 2:
        raise ValueError("packets must be a 2-D (n_slots, packet_bits) array")
    deltas = list(deltas)
    if any(not 0.0 <= d <= 1.0 for d in deltas):
        raise ValueError("erasure probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    survive = rng.random((len(deltas), packets.shape[0])) >= np.asarray(deltas)[:, None]
    outputs = []
    for k in range(len(deltas)):
        kept = np.flatnonzero(survive[k])
        outputs.append(ChannelOutput(k, kept, packets[kept]))
    return outputs


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of a message decode.

    ``needed`` is the number of unknown source packets the solver had to
    pin down; ``rank`` is how many it actually resolved.  ``check_ok`` is
    the embedded-checksum verdict, or ``None`` when no checksum was used.
    """

    ok: bool
    bits: np.ndarray | None
    rank: int
    needed: int
    check_ok: bool | None = None


def _crc_bits(bits: np.ndarray) -> np.ndarray:
    crc = zlib.crc32(np.packbits(bits, bitorder="little").tobytes())
    return np.unpackbits(np.frombuffer(struct.pack("<I", crc), dtype=np.uint8), bitorder="little")


@dataclass(frozen=True)
class RlcParams:
    """Everything a decoder needs to rebuild a random linear code."""

    num_bits: int
    packet_bits: int
    n_slots: int
    field: str
    band: int
    seed: int
    systematic: bool
    embed_check: bool
    spread: bool = True

    @property
    def payload_bits(self) -> int:
        return self.num_bits + (_CRC_BITS if self.embed_check else 0)

    @property
    def num_source(self) -> int:
        return -(-self.payload_bits // self.packet_bits)

    def build_code(self) -> LinearCode:
        return LinearCode(
            self.num_source,
            self.n_slots,
            self.packet_bits,
            field=self.field,
            band=self.band,
            seed=self.seed,
            systematic=self.systematic,
        )


def rlc_encode(
    message_bits: np.ndarray,
    n_slots: int,
    packet_bits: int,
    seed: int,
    *,
    field: str = "auto",
    band: int | None = None,
    systematic: bool = False,
    embed_check: bool = False,
    spread: bool = True,
) -> tuple[np.ndarray, RlcParams]:
    """Encode a bit message into ``n_slots`` random-linear-coded packets.

    With ``embed_check`` a 32-bit checksum is appended to the message so
    decoders can verify the reconstruction end to end.  ``spread`` assigns
    source packets to code columns in low-discrepancy order so that
    decoders holding a message prefix fold out evenly spaced columns
    (ignored for systematic codes, which keep natural order).
    """
    bits = np.ascontiguousarray(message_bits, dtype=np.uint8)
    if bits.size == 0:
        raise ValueError("message must contain at least one bit")
    payload = np.concatenate([bits, _crc_bits(bits)]) if embed_check else bits
    num_source = -(-payload.size // packet_bits)
    if n_slots < num_source:
        raise ValueError(f"{n_slots} slots cannot carry {num_source} source packets")
    use_spread = spread and not systematic
    code = LinearCode(
        num_source, n_slots, packet_bits, field=field, band=band, seed=seed, systematic=systematic
    )
    src = bits_to_packets(payload, packet_bits, num_source)
    if use_spread:
        columns = np.empty_like(src)
        columns[spread_permutation(num_source)] = src
        src = columns
    packets = code.encode_packets(src)
    params = RlcParams(
        num_bits=int(bits.size),
        packet_bits=packet_bits,
        n_slots=n_slots,
        field=code.field,
        band=code.band,
        seed=seed,
        systematic=systematic,
        embed_check=embed_check,
        spread=use_spread,
    )
    return packets, params


def rlc_decode(
    output: ChannelOutput,
    params: RlcParams,
    known_prefix_bits: np.ndarray | None = None,
) -> DecodeResult:
    """Decode an RLC message from one receiver's channel output.

    ``known_prefix_bits`` are leading message bits the receiver already
    holds (e.g. from a cache); every fully covered source packet is folded
    out of the solve, reducing the packets required accordingly.
    """
    code = params.build_code()
    num_source = params.num_source
    perm = spread_permutation(num_source) if params.spread else None
    known_mask = known_packets = None
    if known_prefix_bits is not None:
        prefix = np.ascontiguousarray(known_prefix_bits, dtype=np.uint8)
        num_known = min(prefix.size // params.packet_bits, num_source)
        if num_known:
            positions = perm[:num_known] if perm is not None else np.arange(num_known)
            known_mask = np.zeros(num_source, dtype=np.uint8)
            known_mask[positions] = 1
            known_packets = np.zeros((num_source, params.packet_bits), dtype=np.uint8)
            known_packets[positions] = bits_to_packets(
                prefix[: num_known * params.packet_bits], params.packet_bits, num_known
            )
    res = code.solve(output.received_slots, output.packets, known_mask, known_packets)
    if not res.ok:
        return DecodeResult(False, None, res.rank, res.needed)
    source_packets = res.packets[perm] if perm is not None else res.packets
    payload = packets_to_bits(source_packets, params.payload_bits)
    bits = payload[: params.num_bits]
    if not params.embed_check:
        return DecodeResult(True, bits, res.rank, res.needed)
    check_ok = bool(np.array_equal(payload[params.num_bits :], _crc_bits(bits)))
    return DecodeResult(check_ok, bits, res.rank, res.needed, check_ok)


# ---------------------------------------------------------------------------
# piggyback coding
# ---------------------------------------------------------------------------


def _interleave_labels(k1: int, k2: int) -> np.ndarray:
    """Merge ``k1`` zeros with ``k2`` ones so each stream stays evenly spaced."""
    labels = np.empty(k1 + k2, dtype=np.uint8)
    i = j = 0
    for pos in range(k1 + k2):
        key1 = (i + 0.5) / k1 if i < k1 else math.inf
        key2 = (j + 0.5) / k2 if j < k2 else math.inf
        if key1 <= key2:
            labels[pos] = 0
            i += 1
        else:
            labels[pos] = 1
            j += 1
    return labels


def _piggyback_band(k1: int, k2: int) -> int:
    """Band width keeping side-information folds solvable.

    Folding out one stream thins the band by the stream's share, so the
    band grows inversely with the smaller stream's fraction (within caps).
    """
    total = k1 + k2
    if min(k1, k2) == 0:
        return min(total, 256) if total > 512 else total
    widened = 128 * math.ceil(total / min(k1, k2))
    return min(total, min(_PIGGYBACK_BAND_MAX, max(256, widened)))


@dataclass(frozen=True)
class PiggybackParams:
    """Joint code over a fresh message ``w1`` and a side message ``w2``."""

    len1: int
    len2: int
    packet_bits: int
    n_slots: int
    field: str
    band: int
    seed: int

    @property
    def k1(self) -> int:
        return -(-self.len1 // self.packet_bits)

    @property
    def k2(self) -> int:
        return -(-self.len2 // self.packet_bits) if self.len2 else 0

    @property
    def labels(self) -> np.ndarray:
        return _interleave_labels(self.k1, self.k2)

    def build_code(self) -> LinearCode:
        return LinearCode(
            self.k1 + self.k2,
            self.n_slots,
            self.packet_bits,
            field=self.field,
            band=self.band,
            seed=self.seed,
        )


def piggyback_encode(
    w1_bits: np.ndarray,
    w2_bits: np.ndarray,
    n_slots: int,
    packet_bits: int,
    seed: int,
    *,
    field: str = "auto",
    band: int | None = None,
) -> tuple[np.ndarray, PiggybackParams]:
    """Jointly encode ``w1`` and ``w2`` into ``n_slots`` coded packets.

    An empty ``w2`` degenerates to a plain random linear code over ``w1``.
    """
    w1 = np.ascontiguousarray(w1_bits, dtype=np.uint8)
    w2 = np.ascontiguousarray(w2_bits, dtype=np.uint8)
    if w1.size == 0:
        raise ValueError("w1 must contain at least one bit")
    k1 = -(-w1.size // packet_bits)
    k2 = -(-w2.size // packet_bits) if w2.size else 0
    if n_slots < k1 + k2:
        raise ValueError(f"{n_slots} slots cannot carry {k1 + k2} source packets")
    resolved_band = band if band is not None else _piggyback_band(k1, k2)
    code = LinearCode(k1 + k2, n_slots, packet_bits, field=field, band=resolved_band, seed=seed)
    src = np.empty((k1 + k2, packet_bits), dtype=np.uint8)
    labels = _interleave_labels(k1, k2)
    src[labels == 0] = bits_to_packets(w1, packet_bits, k1)
    if k2:
        src[labels == 1] = bits_to_packets(w2, packet_bits, k2)
    packets = code.encode_packets(src)
    params = PiggybackParams(
        len1=int(w1.size),
        len2=int(w2.size),
        packet_bits=packet_bits,
        n_slots=n_slots,
        field=code.field,
        band=code.band,
        seed=seed,
    )
    return packets, params


def piggyback_decode_with_side_info(
    output: ChannelOutput,
    w2_bits: np.ndarray,
    params: PiggybackParams,
) -> DecodeResult:
    """Recover ``w1`` when the receiver already holds all of ``w2``."""
    w2 = np.ascontiguousarray(w2_bits, dtype=np.uint8)
    if int(w2.size) != params.len2:
        raise ValueError("side information length does not match the code")
    code = params.build_code()
    known_mask = known_packets = None
    if params.k2:
        labels = params.labels
        known_mask = labels.copy()
        known_packets = np.zeros((params.k1 + params.k2, params.packet_bits), dtype=np.uint8)
        known_packets[labels == 1] = bits_to_packets(w2, params.packet_bits, params.k2)
    res = code.solve(output.received_slots, output.packets, known_mask, known_packets)
    if not res.ok:
        return DecodeResult(False, None, res.rank, res.needed)
    if params.k2:
        w1_packets = res.packets[params.labels == 0]
    else:
        w1_packets = res.packets
    return DecodeResult(True, packets_to_bits(w1_packets, params.len1), res.rank, res.needed)


@dataclass(frozen=True)
class PiggybackFullResult:
    """Joint decode of both piggybacked messages."""

    ok: bool
    w1_bits: np.ndarray | None
    w2_bits: np.ndarray | None
    rank: int
    needed: int


def piggyback_decode_full(output: ChannelOutput, params: PiggybackParams) -> PiggybackFullResult:
    """Recover both messages with no side information."""
    code = params.build_code()
    res = code.solve(output.received_slots, output.packets)
    if not res.ok:
        return PiggybackFullResult(False, None, None, res.rank, res.needed)
    if params.k2:
        labels = params.labels
        w1 = packets_to_bits(res.packets[labels == 0], params.len1)
        w2 = packets_to_bits(res.packets[labels == 1], params.len2)
    else:
        w1 = packets_to_bits(res.packets, params.len1)
        w2 = np.zeros(0, dtype=np.uint8)
    return PiggybackFullResult(True, w1, w2, res.rank, res.needed)


# ---------------------------------------------------------------------------
# trial records
# ---------------------------------------------------------------------------


def write_trials(path: str, records: Sequence[dict[str, Any]]) -> None:
    """Write trial records as one sorted-key JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_trials(path: str) -> list[dict[str, Any]]:
    """Read trial records written by :func:`write_trials`."""
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
