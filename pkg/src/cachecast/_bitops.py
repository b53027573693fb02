"""Bit-array packing helpers shared by the linear-code kernels.

The canonical in-memory representation for message payloads throughout the
package is a one-dimensional ``numpy.uint8`` array of 0/1 values ("bits").
The solver kernels work on denser layouts: 64-bit little-endian words for
GF(2) and raw bytes for GF(256).  Bit ``j`` of a packet maps to bit ``j % 64``
of word ``j // 64`` (respectively bit ``j % 8`` of byte ``j // 8``), so
packing and unpacking round-trip exactly.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "bits_to_packets",
    "pack_rows_to_words",
    "pack_rows_to_bytes",
    "packets_to_bits",
    "unpack_rows_from_bytes",
    "unpack_rows_from_words",
]


def bits_to_packets(bits: np.ndarray, packet_bits: int, num_packets: int) -> np.ndarray:
    """Frame a flat bit array into ``num_packets`` rows of ``packet_bits`` bits.

    The tail packet is zero-padded; ``num_packets * packet_bits`` must cover
    the input.
    """
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    total = num_packets * packet_bits
    if bits.size > total:
        raise ValueError(f"{bits.size} bits do not fit in {num_packets} packets of {packet_bits} bits")
    out = np.zeros(total, dtype=np.uint8)
    out[: bits.size] = bits
    return out.reshape(num_packets, packet_bits)


def packets_to_bits(packets: np.ndarray, num_bits: int) -> np.ndarray:
    """Flatten packet rows back into a bit array, stripping the zero padding."""
    flat = np.ascontiguousarray(packets, dtype=np.uint8).reshape(-1)
    if num_bits > flat.size:
        raise ValueError(f"cannot extract {num_bits} bits from {flat.size}")
    return flat[:num_bits].copy()


def pack_rows_to_words(rows: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array into little-endian uint64 words, row by row."""
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D bit array")
    m, L = rows.shape
    n_words = max(1, (L + 63) // 64)
    packed = np.packbits(rows, axis=1, bitorder="little")
    buf = np.zeros((m, n_words * 8), dtype=np.uint8)
    buf[:, : packed.shape[1]] = packed
    return buf.view(np.uint64)


def unpack_rows_from_words(words: np.ndarray, num_bits: int) -> np.ndarray:
    """Inverse of :func:`pack_rows_to_words` for ``num_bits`` columns."""
    words = np.ascontiguousarray(words, dtype=np.uint64)
    if words.ndim != 2:
        raise ValueError("expected a 2-D word array")
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :num_bits].copy()


def pack_rows_to_bytes(rows: np.ndarray) -> np.ndarray:
    """Pack a 2-D 0/1 array into bytes (little bit order); columns must be a multiple of 8."""
    rows = np.ascontiguousarray(rows, dtype=np.uint8)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D bit array")
    if rows.shape[1] % 8:
        raise ValueError("byte packing requires a multiple of 8 bits per row")
    return np.packbits(rows, axis=1, bitorder="little")


def unpack_rows_from_bytes(data: np.ndarray, num_bits: int) -> np.ndarray:
    """Inverse of :func:`pack_rows_to_bytes`."""
    data = np.ascontiguousarray(data, dtype=np.uint8)
    bits = np.unpackbits(data, axis=1, bitorder="little")
    return bits[:, :num_bits].copy()
