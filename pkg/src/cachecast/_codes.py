"""Seeded banded random linear codes with erasure-resilient decoding.

A :class:`LinearCode` maps ``num_source`` source packets to ``n_slots``
coded packets.  Slot ``i`` mixes a window of ``band`` consecutive source
columns; window starts slide across the source range so every column is
covered evenly (edge windows are clamped, which keeps edge-column coverage
at roughly half the interior level rather than letting it collapse).
``band == num_source`` recovers a dense random code.

Decoding solves the received subsystem by insertion-echelon elimination
(:mod:`cachecast._kernels`); a receiver that already knows some source
packets (cache side information) folds them out first and solves the
compressed system over the remaining columns, which preserves the band
structure.  Failure is reported with the achieved rank — by construction it
always reflects genuine rank deficiency of the received equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._bitops import (
    pack_rows_to_bytes,
    pack_rows_to_words,
    unpack_rows_from_bytes,
    unpack_rows_from_words,
)

__all__ = [
    "DENSE_SOURCE_LIMIT",
    "DEFAULT_BAND",
    "GF256_SOURCE_LIMIT",
    "LinearCode",
    "SolveResult",
    "resolve_band",
    "resolve_field",
    "spread_permutation",
]

DENSE_SOURCE_LIMIT = 512
DEFAULT_BAND = 256
GF256_SOURCE_LIMIT = 2048


def spread_permutation(num_source: int) -> np.ndarray:
    """Low-discrepancy assignment of source packets to code columns.

    Returns a permutation ``perm`` such that for every prefix length ``m``
    the columns ``perm[:m]`` are near-evenly spread over the source range
    (bit-reversal order, filtered to the range).  Receivers that know a
    prefix of the message can then fold out evenly spaced columns, which
    thins a banded system uniformly instead of blanking one end of it.
    """
    if num_source < 1:
        raise ValueError("num_source must be positive")
    bits = max(1, (num_source - 1).bit_length())
    values = np.arange(1 << bits, dtype=np.uint64)
    reversed_values = np.zeros_like(values)
    for _ in range(bits):
        reversed_values = (reversed_values << np.uint64(1)) | (values & np.uint64(1))
        values >>= np.uint64(1)
    return reversed_values[reversed_values < num_source].astype(np.int64)


def resolve_field(field: str, packet_bits: int, num_source: int) -> str:
    """Resolve the ``"auto"`` field choice.

    GF(256) is preferred at desk scale when packets are byte-aligned (its
    per-row dependence probability is 256x smaller); GF(2) otherwise — it
    handles any packet size and large systems much faster.
    """
    if field == "auto":
        if packet_bits % 8 == 0 and num_source <= GF256_SOURCE_LIMIT:
            return "gf256"
        return "gf2"
    if field not in ("gf2", "gf256"):
        raise ValueError(f"unknown field {field!r}")
    if field == "gf256" and packet_bits % 8 != 0:
        raise ValueError("GF(256) coding requires packet_bits to be a multiple of 8")
    return field


def resolve_band(band: int | None, num_source: int) -> int:
    """Resolve the band width: dense for small systems, windowed for large ones."""
    if band is None:
        band = num_source if num_source <= DENSE_SOURCE_LIMIT else DEFAULT_BAND
    band = min(int(band), num_source)
    if band < 1:
        raise ValueError("band must be at least 1")
    return band


def _window_starts(n_slots: int, num_source: int, band: int) -> np.ndarray:
    """Clamped sliding window starts covering all source columns."""
    i = np.arange(n_slots, dtype=np.int64)
    lo = (i * num_source) // max(n_slots, 1) - band // 2
    return np.clip(lo, 0, num_source - band)


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a decode attempt.

    ``rank`` counts the independent equations assembled over the unknown
    columns and ``needed`` the number of unknowns; ``packets`` holds the
    recovered source packets (bit rows) when ``ok``.
    """

    ok: bool
    packets: np.ndarray | None
    rank: int
    needed: int


class LinearCode:
    """Deterministic banded random linear code over GF(2) or GF(256)."""

    def __init__(
        self,
        num_source: int,
        n_slots: int,
        packet_bits: int,
        *,
        field: str = "auto",
        band: int | None = None,
        seed: int = 0,
        systematic: bool = False,
    ) -> None:
        if num_source < 1:
            raise ValueError("num_source must be positive")
        if n_slots < num_source:
            raise ValueError(f"n_slots={n_slots} cannot carry {num_source} source packets")
        if packet_bits < 1:
            raise ValueError("packet_bits must be positive")
        self.num_source = int(num_source)
        self.n_slots = int(n_slots)
        self.packet_bits = int(packet_bits)
        self.field = resolve_field(field, packet_bits, num_source)
        self.band = resolve_band(band, num_source)
        self.seed = int(seed)
        self.systematic = bool(systematic)
        rng = np.random.default_rng(self.seed)
        k, n, band_w = self.num_source, self.n_slots, self.band
        if systematic:
            lo = np.empty(n, dtype=np.int64)
            lo[:k] = np.minimum(np.arange(k, dtype=np.int64), k - band_w)
            lo[k:] = _window_starts(n - k, k, band_w)
            self._sys_offsets = np.arange(k, dtype=np.int64) - lo[:k]
        else:
            lo = _window_starts(n, k, band_w)
            self._sys_offsets = None
        self.window_starts = lo
        if self.field == "gf2":
            wr = (band_w + 63) // 64
            raw = rng.integers(0, np.iinfo(np.uint64).max, size=(n, wr), dtype=np.uint64, endpoint=True)
            tail = band_w & 63
            if tail:
                raw[:, -1] &= np.uint64((1 << tail) - 1)
            if systematic:
                raw[:k] = 0
                off = self._sys_offsets
                raw[np.arange(k), off >> 6] = np.uint64(1) << (off & 63).astype(np.uint64)
            self._material = raw
        else:
            coefs = rng.integers(0, 256, size=(n, band_w), dtype=np.uint8)
            if systematic:
                coefs[:k] = 0
                coefs[np.arange(k), self._sys_offsets] = 1
            self._material = coefs

    # -- encoding -----------------------------------------------------------

    def encode_packets(self, source_packets: np.ndarray) -> np.ndarray:
        """Encode (num_source, packet_bits) bit rows into (n_slots, packet_bits)."""
        k, f = self.num_source, self.packet_bits
        if source_packets.shape != (k, f):
            raise ValueError(f"expected source packets of shape {(k, f)}, got {source_packets.shape}")
        if self.field == "gf2":
            src = pack_rows_to_words(source_packets)
            out = np.zeros((self.n_slots, src.shape[1]), dtype=np.uint64)
            _kernels.gf2_encode(self.window_starts, self._material, src, out)
            return unpack_rows_from_words(out, f)
        src = pack_rows_to_bytes(source_packets)
        out = np.zeros((self.n_slots, src.shape[1]), dtype=np.uint8)
        _kernels.gf256_encode(self.window_starts, self._material, src, out, _kernels.GF256_MUL)
        return unpack_rows_from_bytes(out, f)

    # -- decoding -----------------------------------------------------------

    def solve(
        self,
        slot_indices: np.ndarray,
        received_packets: np.ndarray,
        known_mask: np.ndarray | None = None,
        known_packets: np.ndarray | None = None,
    ) -> SolveResult:
        """Recover the source packets from received slots.

        ``known_mask`` marks source columns the receiver already holds;
        ``known_packets`` must then be a full ``(num_source, packet_bits)``
        array whose rows at marked positions carry the known packets
        (unmarked rows are ignored).  Known columns are folded out before
        solving.
        """
        k, f = self.num_source, self.packet_bits
        slot_indices = np.ascontiguousarray(slot_indices, dtype=np.int64)
        m = slot_indices.size
        if known_mask is not None:
            known_mask = np.ascontiguousarray(known_mask, dtype=np.uint8)
            if known_mask.shape != (k,):
                raise ValueError("known_mask must have one entry per source packet")
            num_known = int(known_mask.sum())
            if num_known:
                if known_packets is None:
                    raise ValueError("known_packets required when known_mask is set")
                known_packets = np.ascontiguousarray(known_packets, dtype=np.uint8)
                if known_packets.shape != (k, f):
                    raise ValueError(f"expected known packets of shape {(k, f)}, got {known_packets.shape}")
        else:
            num_known = 0
        needed = k - num_known
        if needed == 0:
            assert known_packets is not None
            return SolveResult(True, known_packets.copy(), 0, 0)
        if m < needed:
            return SolveResult(False, None, 0, needed)
        if received_packets.shape != (m, f):
            raise ValueError(f"expected received packets of shape {(m, f)}, got {received_packets.shape}")

        lo = self.window_starts[slot_indices]
        mat = self._material[slot_indices]
        if self.field == "gf2":
            pays = pack_rows_to_words(received_packets)
        else:
            pays = pack_rows_to_bytes(received_packets)

        if num_known:
            comp_index = np.zeros(k + 1, dtype=np.int64)
            comp_index[1:] = np.cumsum(known_mask == 0)
            if self.field == "gf2":
                known_pays = pack_rows_to_words(known_packets)
            else:
                known_pays = pack_rows_to_bytes(known_packets)
            out_lo = np.zeros(m, dtype=np.int64)
            fold_mat = np.zeros_like(mat)
            pays = pays.copy()
            if self.field == "gf2":
                _kernels.gf2_fold_known(lo, mat, pays, known_mask, known_pays, comp_index, out_lo, fold_mat)
            else:
                _kernels.gf256_fold_known(
                    lo, mat, pays, known_mask, known_pays, comp_index, k, out_lo, fold_mat, _kernels.GF256_MUL
                )
            lo, mat = out_lo, fold_mat
            k_eff = needed
        else:
            k_eff = k

        if self.field == "gf2":
            w_full = mat.shape[1] + 1
            piv_words = np.zeros((k_eff, w_full), dtype=np.uint64)
            piv_pays = np.zeros((k_eff, pays.shape[1]), dtype=np.uint64)
            piv_used = np.zeros(k_eff, dtype=np.uint8)
            rank = int(_kernels.gf2_eliminate(lo, mat, pays, k_eff, piv_words, piv_pays, piv_used, 0))
            if rank < k_eff:
                return SolveResult(False, None, rank, needed)
            sol = np.zeros((k_eff, pays.shape[1]), dtype=np.uint64)
            _kernels.gf2_back_substitute(piv_words, piv_pays, k_eff, sol)
            solved = unpack_rows_from_words(sol, f)
        else:
            piv_coefs = np.zeros((k_eff, self.band), dtype=np.uint8)
            piv_pays = np.zeros((k_eff, pays.shape[1]), dtype=np.uint8)
            piv_used = np.zeros(k_eff, dtype=np.uint8)
            rank = int(
                _kernels.gf256_eliminate(
                    lo, mat, pays, k_eff, piv_coefs, piv_pays, piv_used, 0, _kernels.GF256_MUL, _kernels.GF256_INV
                )
            )
            if rank < k_eff:
                return SolveResult(False, None, rank, needed)
            sol = np.zeros((k_eff, pays.shape[1]), dtype=np.uint8)
            _kernels.gf256_back_substitute(piv_coefs, piv_pays, k_eff, sol, _kernels.GF256_MUL)
            solved = unpack_rows_from_bytes(sol, f)

        if num_known:
            full = np.ascontiguousarray(known_packets, dtype=np.uint8).copy()
            full[known_mask == 0] = solved
            return SolveResult(True, full, rank, needed)
        return SolveResult(True, solved, rank, needed)
