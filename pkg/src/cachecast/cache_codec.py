"""Subset-indexed coded caching: placement, XOR delivery, and decoding.

Each of the ``num_files`` equal-length files is split into one submessage
per ``t_tilde``-subset of the ``k_tilde`` receivers (colexicographic
order); receiver ``i`` caches the submessages of every file whose subset
contains ``i``.  Delivery sends one XOR per ``(t_tilde + 1)``-subset ``T``,
combining, for each ``i`` in ``T``, the submessage of receiver ``i``'s
demanded file indexed by ``T \\ {i}`` — every receiver in ``T`` can strip
the other terms from its cache.

Submessage lengths are equalized by zero padding the file tail; decoding
strips the padding, so files of any bit length round-trip exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

__all__ = [
    "CacheContent",
    "CodecAccounting",
    "XorMessage",
    "accounting",
    "decode",
    "dump_cache",
    "encode_xor",
    "load_cache",
    "place",
    "split_file",
    "subset_rank",
    "subsets_colex",
]


def subsets_colex(num_receivers: int, size: int) -> list[tuple[int, ...]]:
    """All ``size``-subsets of ``range(num_receivers)`` in colexicographic order."""
    if size < 0 or size > num_receivers:
        return []
    return sorted(combinations(range(num_receivers), size), key=lambda s: tuple(reversed(s)))


def subset_rank(subset: tuple[int, ...]) -> int:
    """Colexicographic rank of a sorted subset of nonnegative integers."""
    return sum(comb(e, j + 1) for j, e in enumerate(subset))


def split_file(bits: np.ndarray, k_tilde: int, t_tilde: int) -> list[np.ndarray]:
    """Split a file into ``C(k_tilde, t_tilde)`` equal submessages (zero-padded)."""
    num_parts = comb(k_tilde, t_tilde)
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    part_len = (bits.size + num_parts - 1) // num_parts if bits.size else 0
    padded = np.zeros(num_parts * part_len, dtype=np.uint8)
    padded[: bits.size] = bits
    return [padded[i * part_len : (i + 1) * part_len] for i in range(num_parts)]


@dataclass(frozen=True)
class CacheContent:
    """One receiver's cache: submessages keyed by (file index, subset rank)."""

    receiver: int
    k_tilde: int
    t_tilde: int
    entries: dict[tuple[int, int], np.ndarray]

    @property
    def total_bits(self) -> int:
        return sum(v.size for v in self.entries.values())


@dataclass(frozen=True)
class XorMessage:
    """One delivery transmission: the XOR for a ``(t_tilde + 1)``-subset."""

    subset: tuple[int, ...]
    bits: np.ndarray


def _validate_library(library: list[np.ndarray]) -> int:
    if not library:
        raise ValueError("library must contain at least one file")
    sizes = {np.asarray(f).size for f in library}
    if len(sizes) != 1:
        raise ValueError("library files must have equal bit length")
    return sizes.pop()


def place(k_tilde: int, t_tilde: int, library: list[np.ndarray]) -> list[CacheContent]:
    """Fill every receiver's cache from the file library.

    Requires ``1 <= t_tilde <= k_tilde`` and files long enough to produce a
    nonempty submessage per subset.
    """
    if not 1 <= t_tilde <= k_tilde:
        raise ValueError("t_tilde must satisfy 1 <= t_tilde <= k_tilde")
    file_bits = _validate_library(library)
    if file_bits < comb(k_tilde, t_tilde):
        raise ValueError(f"files of {file_bits} bits cannot be split into {comb(k_tilde, t_tilde)} submessages")
    subsets = subsets_colex(k_tilde, t_tilde)
    splits = [split_file(np.asarray(f, dtype=np.uint8), k_tilde, t_tilde) for f in library]
    caches = []
    for receiver in range(k_tilde):
        entries = {
            (d, rank): splits[d][rank]
            for d in range(len(library))
            for rank, subset in enumerate(subsets)
            if receiver in subset
        }
        caches.append(CacheContent(receiver, k_tilde, t_tilde, entries))
    return caches


def encode_xor(
    k_tilde: int,
    t_tilde: int,
    library: list[np.ndarray],
    demand: tuple[int, ...] | list[int],
) -> list[XorMessage]:
    """Delivery XOR messages for the given demand, in colex subset order.

    ``t_tilde = 0`` is the degenerate uncached level: one "XOR" per single
    receiver carrying its demanded file verbatim.
    """
    if not 0 <= t_tilde <= k_tilde:
        raise ValueError("t_tilde must satisfy 0 <= t_tilde <= k_tilde")
    if len(demand) != k_tilde:
        raise ValueError("demand must list one file per receiver")
    _validate_library(library)
    num_files = len(library)
    if any(not 0 <= d < num_files for d in demand):
        raise ValueError("demand indexes a file outside the library")
    splits = [split_file(np.asarray(f, dtype=np.uint8), k_tilde, t_tilde) for f in library]
    rank_of = {s: i for i, s in enumerate(subsets_colex(k_tilde, t_tilde))}
    messages = []
    for big in subsets_colex(k_tilde, t_tilde + 1):
        acc: np.ndarray | None = None
        for i in big:
            rest = tuple(x for x in big if x != i)
            part = splits[demand[i]][rank_of[rest]]
            acc = part.copy() if acc is None else acc ^ part
        assert acc is not None
        messages.append(XorMessage(big, acc))
    return messages


def decode(
    receiver: int,
    k_tilde: int,
    t_tilde: int,
    demand: tuple[int, ...] | list[int],
    xors: list[XorMessage],
    cache: CacheContent,
    file_bits: int,
) -> np.ndarray:
    """Reconstruct receiver ``receiver``'s demanded file from XORs plus cache."""
    if not 0 <= receiver < k_tilde:
        raise ValueError("receiver index out of range")
    if cache.receiver != receiver or cache.k_tilde != k_tilde or cache.t_tilde != t_tilde:
        raise ValueError("cache does not match the requested decoding context")
    subsets = subsets_colex(k_tilde, t_tilde)
    rank_of = {s: i for i, s in enumerate(subsets)}
    by_subset = {m.subset: m.bits for m in xors}
    want = demand[receiver]
    parts: list[np.ndarray] = []
    for rank, subset in enumerate(subsets):
        if receiver in subset:
            parts.append(cache.entries[(want, rank)])
            continue
        big = tuple(sorted(subset + (receiver,)))
        if big not in by_subset:
            raise ValueError(f"missing XOR message for subset {big}")
        acc = by_subset[big].copy()
        for j in big:
            if j == receiver:
                continue
            rest = tuple(x for x in big if x != j)
            acc ^= cache.entries[(demand[j], rank_of[rest])]
        parts.append(acc)
    return np.concatenate(parts)[:file_bits] if parts else np.zeros(0, dtype=np.uint8)


@dataclass(frozen=True)
class CodecAccounting:
    """Resource usage of a caching level at a given per-file rate."""

    pipe_rate: float
    memory_bits: float


def accounting(k_tilde: int, t_tilde: int, num_files: int, rate: float) -> CodecAccounting:
    """Delivery-pipe rate and per-receiver cache usage of level ``t_tilde``.

    Delivery must carry ``rate * (k_tilde - t_tilde) / (t_tilde + 1)`` bits
    per use; each receiver caches a ``t_tilde / k_tilde`` fraction of every
    file.
    """
    if not 0 <= t_tilde <= k_tilde:
        raise ValueError("t_tilde must satisfy 0 <= t_tilde <= k_tilde")
    pipe = rate * (k_tilde - t_tilde) / (t_tilde + 1)
    memory = num_files * t_tilde * rate / k_tilde
    return CodecAccounting(pipe, memory)


# ---------------------------------------------------------------------------
# binary cache dumps
# ---------------------------------------------------------------------------

_MAGIC = b"CCCH"


def dump_cache(cache: CacheContent, path: str) -> None:
    """Serialize a cache to a compact binary file (see :func:`load_cache`)."""
    entries = sorted(cache.entries.items())
    lengths = {v.size for _, v in entries}
    if len(lengths) > 1:
        raise ValueError("cache entries must share one submessage length")
    sub_len = lengths.pop() if lengths else 0
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIIIQ", cache.receiver, cache.k_tilde, cache.t_tilde, len(entries), sub_len))
        for (d, rank), bits in entries:
            fh.write(struct.pack("<II", d, rank))
            fh.write(np.packbits(bits, bitorder="little").tobytes())


def load_cache(path: str) -> CacheContent:
    """Load a cache written by :func:`dump_cache`."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a cache dump file")
        receiver, k_tilde, t_tilde, num_entries, sub_len = struct.unpack("<IIIIQ", fh.read(24))
        n_bytes = (sub_len + 7) // 8
        entries = {}
        for _ in range(num_entries):
            d, rank = struct.unpack("<II", fh.read(8))
            raw = np.frombuffer(fh.read(n_bytes), dtype=np.uint8)
            entries[(d, rank)] = np.unpackbits(raw, count=sub_len, bitorder="little")
    return CacheContent(receiver, k_tilde, t_tilde, entries)
