"""Numba kernels for banded random-linear-code algebra over GF(2) and GF(256).

A code word (slot) has coefficient support confined to a window of ``band``
consecutive source columns starting at ``lo``.  Decoding is an online
insertion-echelon elimination: each received row is reduced against the
pivots installed so far and either installs as the pivot for its leading
column or vanishes (linearly dependent).  Reducing two rows with the same
leading column keeps the support inside a width-``band`` window anchored at
that column, so fixed-width row storage is exact — a decode failure always
means genuine rank deficiency, never storage truncation.

GF(2) rows are packed into little-endian 64-bit words anchored at the
64-bit boundary below the leading column (rows sharing a leading column
share an anchor, so reduction is a pure word-wise XOR).  GF(256) rows are
byte windows anchored exactly at the leading column.
"""

from __future__ import annotations

import numba as nb
import numpy as np

U0 = np.uint64(0)
U1 = np.uint64(1)

__all__ = [
    "GF256_EXP",
    "GF256_INV",
    "GF256_LOG",
    "GF256_MUL",
    "gf2_back_substitute",
    "gf2_eliminate",
    "gf2_encode",
    "gf2_fold_known",
    "gf256_back_substitute",
    "gf256_eliminate",
    "gf256_encode",
    "gf256_fold_known",
    "warm_up",
]


def _build_gf256_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Exp/log/product/inverse tables for GF(2^8) with polynomial 0x11b."""
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x ^= x << 1  # multiply by the generator 3
        if x & 0x100:
            x ^= 0x11B
    exp[255:510] = exp[:255]
    mul = np.zeros((256, 256), dtype=np.uint8)
    nz = np.arange(1, 256)
    mul[1:, 1:] = exp[(log[nz][:, None] + log[nz][None, :]) % 255]
    inv = np.zeros(256, dtype=np.uint8)
    inv[nz] = exp[(255 - log[nz]) % 255]
    return exp, log.astype(np.int64), mul, inv


GF256_EXP, GF256_LOG, GF256_MUL, GF256_INV = _build_gf256_tables()


@nb.njit(inline="always")
def _ctz64(x):
    """Index of the lowest set bit of a nonzero uint64."""
    n = 0
    if x & np.uint64(0xFFFFFFFF) == U0:
        n += 32
        x >>= np.uint64(32)
    if x & np.uint64(0xFFFF) == U0:
        n += 16
        x >>= np.uint64(16)
    if x & np.uint64(0xFF) == U0:
        n += 8
        x >>= np.uint64(8)
    if x & np.uint64(0xF) == U0:
        n += 4
        x >>= np.uint64(4)
    if x & np.uint64(0x3) == U0:
        n += 2
        x >>= np.uint64(2)
    if x & np.uint64(0x1) == U0:
        n += 1
    return n


@nb.njit(cache=True, nogil=True)
def gf2_encode(lo_arr, raw, src, out):
    """XOR-accumulate windowed combinations of source packets into coded slots.

    ``raw[i]`` holds the window coefficient bits of slot ``i`` (bit ``b`` is
    the coefficient of source column ``lo_arr[i] + b``); ``src`` and ``out``
    are word-packed payloads of shape (k, PW) and (n, PW).
    """
    n, wr = raw.shape
    pw = src.shape[1]
    for i in range(n):
        lo = lo_arr[i]
        for w in range(wr):
            bits = raw[i, w]
            base = lo + (w << 6)
            while bits != U0:
                b = _ctz64(bits)
                bits &= bits - U1
                c = base + b
                for p in range(pw):
                    out[i, p] ^= src[c, p]


@nb.njit(cache=True, nogil=True)
def gf2_fold_known(lo_arr, raw, pays, known_mask, known_pays, comp_index, out_lo, out_raw):
    """Remove known source columns from received rows.

    Known columns' contributions are XORed into the payloads in place and
    the remaining coefficients re-indexed over the unknown columns
    (``comp_index[c]`` = number of unknown columns below ``c``).  Window
    width never grows, so ``out_raw`` has the same word width as ``raw``.
    """
    m, wr = raw.shape
    pw = pays.shape[1]
    for r in range(m):
        lo = lo_arr[r]
        nlo = comp_index[lo]
        out_lo[r] = nlo
        for w in range(wr):
            bits = raw[r, w]
            base = lo + (w << 6)
            while bits != U0:
                b = _ctz64(bits)
                bits &= bits - U1
                c = base + b
                if known_mask[c] != 0:
                    for p in range(pw):
                        pays[r, p] ^= known_pays[c, p]
                else:
                    nc = comp_index[c] - nlo
                    out_raw[r, nc >> 6] |= U1 << np.uint64(nc & 63)


@nb.njit(cache=True, nogil=True)
def gf2_eliminate(lo_arr, raw, pays, k, piv_words, piv_pays, piv_used, count0):
    """Insert received rows into the echelon state; returns the pivot count.

    ``piv_words`` has one extra word beyond the window width so that a row
    anchored at the 64-bit boundary below its leading column always covers
    the full band.  Stops early once all ``k`` pivots are present.
    """
    m, wr = raw.shape
    w_full = piv_words.shape[1]
    pw = pays.shape[1]
    buf = np.empty(w_full, np.uint64)
    pay = np.empty(pw, np.uint64)
    count = count0
    for r in range(m):
        if count == k:
            break
        lo = lo_arr[r]
        a = lo >> 6
        s = lo & 63
        if s == 0:
            for w in range(wr):
                buf[w] = raw[r, w]
            for w in range(wr, w_full):
                buf[w] = U0
        else:
            su = np.uint64(s)
            down = np.uint64(64 - s)
            prev = U0
            for w in range(wr):
                v = raw[r, w]
                buf[w] = (v << su) | prev
                prev = v >> down
            buf[wr] = prev
            for w in range(wr + 1, w_full):
                buf[w] = U0
        for p in range(pw):
            pay[p] = pays[r, p]
        lead = -1
        for w in range(w_full):
            if buf[w] != U0:
                lead = ((a + w) << 6) + _ctz64(buf[w])
                break
        if lead < 0:
            continue
        shift = (lead >> 6) - a
        if shift > 0:
            for w in range(w_full - shift):
                buf[w] = buf[w + shift]
            for w in range(w_full - shift, w_full):
                buf[w] = U0
            a += shift
        while True:
            if piv_used[lead] == 0:
                for w in range(w_full):
                    piv_words[lead, w] = buf[w]
                for p in range(pw):
                    piv_pays[lead, p] = pay[p]
                piv_used[lead] = 1
                count += 1
                break
            for w in range(w_full):
                buf[w] ^= piv_words[lead, w]
            for p in range(pw):
                pay[p] ^= piv_pays[lead, p]
            nl = -1
            for w in range(w_full):
                if buf[w] != U0:
                    nl = ((a + w) << 6) + _ctz64(buf[w])
                    break
            if nl < 0:
                break
            shift = (nl >> 6) - a
            if shift > 0:
                for w in range(w_full - shift):
                    buf[w] = buf[w + shift]
                for w in range(w_full - shift, w_full):
                    buf[w] = U0
                a += shift
            lead = nl
    return count


@nb.njit(cache=True, nogil=True)
def gf2_back_substitute(piv_words, piv_pays, k, out):
    """Solve the full-rank echelon system; ``out[c]`` receives source packet ``c``."""
    w_full = piv_words.shape[1]
    pw = piv_pays.shape[1]
    for lead in range(k - 1, -1, -1):
        a = lead >> 6
        for p in range(pw):
            out[lead, p] = piv_pays[lead, p]
        for w in range(w_full):
            bits = piv_words[lead, w]
            base = (a + w) << 6
            while bits != U0:
                b = _ctz64(bits)
                bits &= bits - U1
                c = base + b
                if c != lead and c < k:
                    for p in range(pw):
                        out[lead, p] ^= out[c, p]


@nb.njit(cache=True, nogil=True)
def gf256_encode(lo_arr, coefs, src, out, mul):
    """GF(256) windowed encode; payloads are byte arrays of shape (*, PB)."""
    n, band = coefs.shape
    k = src.shape[0]
    pb = src.shape[1]
    for i in range(n):
        lo = lo_arr[i]
        jmax = min(band, k - lo)
        for j in range(jmax):
            c = coefs[i, j]
            if c != 0:
                col = lo + j
                for p in range(pb):
                    out[i, p] ^= mul[c, src[col, p]]


@nb.njit(cache=True, nogil=True)
def gf256_fold_known(lo_arr, coefs, pays, known_mask, known_pays, comp_index, k, out_lo, out_coefs, mul):
    """GF(256) analogue of :func:`gf2_fold_known`."""
    m, band = coefs.shape
    pb = pays.shape[1]
    for r in range(m):
        lo = lo_arr[r]
        nlo = comp_index[lo]
        out_lo[r] = nlo
        jmax = min(band, k - lo)
        for j in range(jmax):
            c = coefs[r, j]
            if c == 0:
                continue
            col = lo + j
            if known_mask[col] != 0:
                for p in range(pb):
                    pays[r, p] ^= mul[c, known_pays[col, p]]
            else:
                out_coefs[r, comp_index[col] - nlo] = c


@nb.njit(cache=True, nogil=True)
def gf256_eliminate(lo_arr, coefs, pays, k, piv_coefs, piv_pays, piv_used, count0, mul, inv):
    """GF(256) insertion-echelon elimination with pivot normalization."""
    m, band = coefs.shape
    pb = pays.shape[1]
    row = np.empty(band, np.uint8)
    pay = np.empty(pb, np.uint8)
    count = count0
    for r in range(m):
        if count == k:
            break
        lo = lo_arr[r]
        for j in range(band):
            row[j] = coefs[r, j]
        for p in range(pb):
            pay[p] = pays[r, p]
        j = 0
        while j < band and row[j] == 0:
            j += 1
        if j == band:
            continue
        if j > 0:
            for jj in range(band - j):
                row[jj] = row[jj + j]
            for jj in range(band - j, band):
                row[jj] = 0
        lead = lo + j
        while True:
            if piv_used[lead] == 0:
                scale = inv[row[0]]
                for jj in range(band):
                    piv_coefs[lead, jj] = mul[scale, row[jj]]
                for p in range(pb):
                    piv_pays[lead, p] = mul[scale, pay[p]]
                piv_used[lead] = 1
                count += 1
                break
            f = row[0]
            for jj in range(band):
                row[jj] ^= mul[f, piv_coefs[lead, jj]]
            for p in range(pb):
                pay[p] ^= mul[f, piv_pays[lead, p]]
            j = 1
            while j < band and row[j] == 0:
                j += 1
            if j == band:
                break
            for jj in range(band - j):
                row[jj] = row[jj + j]
            for jj in range(band - j, band):
                row[jj] = 0
            lead += j
    return count


@nb.njit(cache=True, nogil=True)
def gf256_back_substitute(piv_coefs, piv_pays, k, out, mul):
    """GF(256) back-substitution over normalized pivots."""
    band = piv_coefs.shape[1]
    pb = piv_pays.shape[1]
    for lead in range(k - 1, -1, -1):
        for p in range(pb):
            out[lead, p] = piv_pays[lead, p]
        jmax = min(band, k - lead)
        for j in range(1, jmax):
            c = piv_coefs[lead, j]
            if c != 0:
                col = lead + j
                for p in range(pb):
                    out[lead, p] ^= mul[c, out[col, p]]


def warm_up() -> None:
    """Trigger JIT compilation of all kernels on toy inputs."""
    lo = np.zeros(3, dtype=np.int64)
    raw = np.full((3, 1), 7, dtype=np.uint64)
    raw[1, 0] = 3
    raw[2, 0] = 5
    pays = np.arange(3, dtype=np.uint64).reshape(3, 1) + 1
    src = np.arange(3, dtype=np.uint64).reshape(3, 1)
    out = np.zeros((3, 1), dtype=np.uint64)
    gf2_encode(lo, raw, src, out)
    piv_w = np.zeros((3, 2), dtype=np.uint64)
    piv_p = np.zeros((3, 1), dtype=np.uint64)
    used = np.zeros(3, dtype=np.uint8)
    count = gf2_eliminate(lo, raw, pays.copy(), 3, piv_w, piv_p, used, 0)
    if count == 3:
        sol = np.zeros((3, 1), dtype=np.uint64)
        gf2_back_substitute(piv_w, piv_p, 3, sol)
    mask = np.array([1, 0, 0], dtype=np.uint8)
    comp = np.array([0, 0, 1, 2], dtype=np.int64)
    out_lo = np.zeros(3, dtype=np.int64)
    out_raw = np.zeros((3, 1), dtype=np.uint64)
    gf2_fold_known(lo, raw, pays.copy(), mask, pays.copy(), comp, out_lo, out_raw)

    coefs = np.array([[1, 2], [3, 1], [0, 5]], dtype=np.uint8)
    pays8 = np.arange(3, dtype=np.uint8).reshape(3, 1) + 1
    src8 = np.arange(3, dtype=np.uint8).reshape(3, 1)
    out8 = np.zeros((3, 1), dtype=np.uint8)
    lo8 = np.array([0, 1, 1], dtype=np.int64)
    gf256_encode(lo8, coefs, src8, out8, GF256_MUL)
    piv_c = np.zeros((3, 2), dtype=np.uint8)
    piv_p8 = np.zeros((3, 1), dtype=np.uint8)
    used8 = np.zeros(3, dtype=np.uint8)
    count = gf256_eliminate(lo8, coefs, pays8.copy(), 3, piv_c, piv_p8, used8, 0, GF256_MUL, GF256_INV)
    if count == 3:
        sol8 = np.zeros((3, 1), dtype=np.uint8)
        gf256_back_substitute(piv_c, piv_p8, 3, sol8, GF256_MUL)
    out_c = np.zeros((3, 2), dtype=np.uint8)
    gf256_fold_known(lo8, coefs, pays8.copy(), mask, pays8.copy(), comp, 3, out_lo, out_c, GF256_MUL)
