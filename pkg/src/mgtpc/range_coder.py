"""Bit-exact integer range coder over 16-bit cumulative-frequency tables.

Carry handling follows the classic byte-wise scheme (32-bit range, 64-bit
low, cache + pending-0xFF run).  The hot loops are integer-only and jitted
with numba; identical inputs give identical bytes on every run.
"""

from functools import lru_cache

import numpy as np
from numba import njit

from . import entropy_model as em
from .errors import ContractViolation, DecodeError

PRECISION = 16
TOTAL = 1 << PRECISION          # 65536
NUM_SYMBOLS = em.NUM_SYMBOLS    # 128
_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


def build_cdf(sigma_index: int) -> np.ndarray:
    """Cumulative frequencies cf[0..S] for one scale-table entry.

    Frequencies are proportional to the discretized-Gaussian likelihood,
    quantized by largest remainder with a mandatory minimum of 1, and sum
    to exactly 65536.
    """
    qs = np.arange(em.SYMBOL_MIN, em.SYMBOL_MAX + 1)
    p = em.gaussian_likelihood(qs, np.full(qs.shape, sigma_index, dtype=np.int64))
    raw = p / p.sum() * TOTAL
    freq = np.floor(raw).astype(np.int64)
    deficit = TOTAL - int(freq.sum())
    if deficit > 0:
        rem = raw - np.floor(raw)
        # ties resolve by symbol index (stable sort on negated remainder)
        order = np.argsort(-rem, kind="stable")
        freq[order[:deficit]] += 1
    # repair zero frequencies by taking units from the current maximum,
    # so clipped outliers stay decodable
    for i in np.flatnonzero(freq == 0):
        freq[int(np.argmax(freq))] -= 1
        freq[i] = 1
    cdf = np.zeros(NUM_SYMBOLS + 1, dtype=np.int64)
    np.cumsum(freq, out=cdf[1:])
    return cdf


@lru_cache(maxsize=1)
def default_cdf_matrix() -> np.ndarray:
    """(64, S+1) CDF matrix covering the whole scale table; read-only."""
    m = np.stack([build_cdf(i) for i in range(em.NUM_SCALES)])
    m.setflags(write=False)
    return m


@njit(cache=True)
def _rc_encode(syms, idx, cdfs, out):  # pragma: no cover - jitted
    low = np.int64(0)
    rng = np.int64(_MASK32)
    cache = np.int64(0)
    cache_size = np.int64(1)
    pos = 0
    n = syms.shape[0]
    for i in range(n + 5):
        if i < n:
            row = idx[i]
            s = syms[i]
            r = rng >> 16
            low += r * cdfs[row, s]
            rng = r * (cdfs[row, s + 1] - cdfs[row, s])
            if rng >= _TOP:
                continue
        # one byte shift per flush iteration / per renorm step
        while True:
            if low < 0xFF000000 or low > _MASK32:
                carry = low >> 32
                out[pos] = (cache + carry) & 0xFF
                pos += 1
                for _ in range(cache_size - 1):
                    out[pos] = (0xFF + carry) & 0xFF
                    pos += 1
                cache_size = 0
                cache = (low >> 24) & 0xFF
            cache_size += 1
            low = (low << 8) & _MASK32
            rng <<= 8
            if i >= n or rng >= _TOP:
                break
    # pending bytes can no longer receive a carry; commit them, then drop
    # the final byte (the decoder never consumes it)
    out[pos] = cache & 0xFF
    pos += 1
    for _ in range(cache_size - 1):
        out[pos] = 0xFF
        pos += 1
    return pos - 1


@njit(cache=True)
def _rc_decode(data, idx, cdfs, out):  # pragma: no cover - jitted
    n = out.shape[0]
    total_len = data.shape[0]
    if total_len < 5:
        return -1
    code = np.int64(0)
    pos = 1  # leading byte is always the encoder's initial zero cache
    for _ in range(4):
        code = (code << 8) | data[pos]
        pos += 1
    rng = np.int64(_MASK32)
    for i in range(n):
        row = idx[i]
        r = rng >> 16
        val = code // r
        if val >= TOTAL:
            val = TOTAL - 1
        lo = 0
        hi = NUM_SYMBOLS
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cdfs[row, mid] <= val:
                lo = mid
            else:
                hi = mid
        out[i] = lo
        code -= r * cdfs[row, lo]
        rng = r * (cdfs[row, lo + 1] - cdfs[row, lo])
        while rng < _TOP:
            if pos >= total_len:
                return -1
            code = (code << 8) | data[pos]
            pos += 1
            rng <<= 8
    return pos


def encode(symbols: np.ndarray, indices: np.ndarray, cdfs: np.ndarray) -> bytes:
    """Range-code ``symbols`` (values in [-64, 63]); ``indices[i]`` selects
    the CDF row for symbol i."""
    syms = np.asarray(symbols, dtype=np.int64).ravel()
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if syms.shape != idx.shape:
        raise ContractViolation(
            f"symbols ({syms.shape}) and indices ({idx.shape}) must align")
    if syms.size and (syms.min() < em.SYMBOL_MIN or syms.max() > em.SYMBOL_MAX):
        raise ContractViolation(
            f"symbol out of support [{em.SYMBOL_MIN}, {em.SYMBOL_MAX}]")
    if idx.size and (idx.min() < 0 or idx.max() >= cdfs.shape[0]):
        raise ContractViolation("CDF row index out of range")
    offs = syms - em.SYMBOL_MIN
    out = np.empty(2 * syms.size + 16, dtype=np.uint8)
    length = _rc_encode(offs, idx, np.ascontiguousarray(cdfs, dtype=np.int64), out)
    return bytes(out[:length])


def decode(data: bytes, indices: np.ndarray, cdfs: np.ndarray,
           count: int) -> np.ndarray:
    """Inverse of :func:`encode`; consumes exactly ``len(data)`` bytes."""
    idx = np.asarray(indices, dtype=np.int64).ravel()
    if idx.size != count:
        raise ContractViolation(f"need {count} CDF indices, got {idx.size}")
    buf = np.frombuffer(bytes(data), dtype=np.uint8)
    out = np.empty(count, dtype=np.int64)
    used = _rc_decode(buf, idx, np.ascontiguousarray(cdfs, dtype=np.int64), out)
    if used < 0:
        raise DecodeError("truncated range-coded stream")
    if used != buf.size:
        raise DecodeError(
            f"stream length mismatch: consumed {used} of {buf.size} bytes")
    return out + em.SYMBOL_MIN
