"""Median edge-detector prediction with Golomb-Rice residual coding.

For pixel x with causal neighbours a (left), b (above) and c (above-left)::

    pred = min(a, b)   if c >= max(a, b)
           max(a, b)   if c <= min(a, b)
           a + b - c   otherwise

Outside the image: row 0 sees zeros above, column 0 uses the pixel above for
both a and c. Residuals are reduced modulo 2**n, folded to non-negative
integers (0, -1, 1, -2, ... -> 0, 1, 2, 3, ...) and Rice coded with a
parameter k fixed per row: k = ceil(log2(mean |residual| of the previous
row + 1)). The first row's k is chosen the same way from that row itself and
stored in front of the stream.

Every row starts with one flag bit. A 1 means every residual after the
row's first pixel is zero, so only that first residual follows (a row-level
run mode for flat content such as empty scan lines or a constant channel);
a 0 is followed by Rice codes for the whole row.
"""

from __future__ import annotations

import numpy as np
from numba import njit

ESCAPE = 24  # unary prefixes this long are followed by the raw folded value


class GolombError(ValueError):
    pass


@njit(cache=True)
def _predict(x, r, c):
    if r == 0:
        b = 0
        cc = 0
        a = x[r, c - 1] if c > 0 else 0
    elif c == 0:
        b = x[r - 1, 0]
        a = b
        cc = b
    else:
        a = x[r, c - 1]
        b = x[r - 1, c]
        cc = x[r - 1, c - 1]
    mx = a if a > b else b
    mn = a if a < b else b
    if cc >= mx:
        return mn
    if cc <= mn:
        return mx
    return a + b - cc


@njit(cache=True)
def residuals(plane, bit_depth):
    """Signed prediction residuals, reduced to [-2**(n-1), 2**(n-1))."""
    rows, cols = plane.shape
    x = plane.astype(np.int64)
    half = 1 << (bit_depth - 1)
    mask = (1 << bit_depth) - 1
    out = np.empty((rows, cols), dtype=np.int64)
    for r in range(rows):
        for c in range(cols):
            e = x[r, c] - _predict(x, r, c)
            out[r, c] = ((e + half) & mask) - half
    return out


@njit(cache=True)
def _row_k(abs_sum, cols, bit_depth):
    k = 0
    while (cols << k) < abs_sum + cols and k < bit_depth:
        k += 1
    return k


@njit(cache=True)
def _put(out, st, value, nbits):
    buf = st[1] | (value << st[2])
    cnt = st[2] + nbits
    pos = st[0]
    while cnt >= 8:
        out[pos] = buf & 0xFF
        pos += 1
        buf >>= 8
        cnt -= 8
    st[0] = pos
    st[1] = buf
    st[2] = cnt


@njit(cache=True)
def _put_residual(out, st, e, k, bit_depth):
    m = 2 * e if e >= 0 else -2 * e - 1
    q = m >> k
    if q < ESCAPE:
        _put(out, st, (1 << q) - 1, q + 1)  # q ones then a zero
        if k:
            _put(out, st, m & ((1 << k) - 1), k)
    else:
        _put(out, st, (1 << ESCAPE) - 1, ESCAPE)
        _put(out, st, m, bit_depth)


@njit(cache=True)
def _encode(plane, bit_depth):
    rows, cols = plane.shape
    res = residuals(plane, bit_depth)
    out = np.zeros((rows * cols * (ESCAPE + bit_depth + 2) + rows) // 8 + 16, dtype=np.uint8)
    st = np.zeros(3, dtype=np.int64)
    first = 0
    if rows > 0:
        first = _row_k(np.abs(res[0]).sum(), cols, bit_depth)
    k = first
    for r in range(rows):
        flat = True
        for c in range(1, cols):
            if res[r, c] != 0:
                flat = False
                break
        _put(out, st, 1 if flat else 0, 1)
        span = 1 if flat else cols
        abs_sum = 0
        for c in range(span):
            e = res[r, c]
            abs_sum += e if e >= 0 else -e
            _put_residual(out, st, e, k, bit_depth)
        k = _row_k(abs_sum, cols, bit_depth)
    if st[2] > 0:
        out[st[0]] = st[1] & 0xFF
        st[0] += 1
    return out[: st[0]], first


@njit(cache=True)
def _decode(src, rows, cols, bit_depth, first_k):
    out = np.zeros((rows, cols), dtype=np.int64)
    mask = (1 << bit_depth) - 1
    nsrc = src.shape[0]
    pos = 0
    buf = np.uint64(0)
    cnt = 0
    k = first_k
    for r in range(rows):
        abs_sum = 0
        flat = False
        for c in range(cols):
            if flat:
                out[r, c] = _predict(out, r, c) & mask
                continue
            # keep at least 48 bits buffered when input remains
            while cnt <= 56 and pos < nsrc:
                buf |= np.uint64(src[pos]) << np.uint64(cnt)
                pos += 1
                cnt += 8
            if c == 0:
                if cnt < 1:
                    return out, False
                flat = (buf & np.uint64(1)) == np.uint64(1)
                buf >>= np.uint64(1)
                cnt -= 1
            # count trailing ones a byte at a time
            q = 0
            probe = buf
            while q < ESCAPE and q + 8 <= cnt and (probe & np.uint64(0xFF)) == np.uint64(0xFF):
                q += 8
                probe >>= np.uint64(8)
            while q < ESCAPE and q < cnt and probe & np.uint64(1):
                q += 1
                probe >>= np.uint64(1)
            if q > ESCAPE:
                q = ESCAPE
            if q < ESCAPE:
                if q + 1 + k > cnt:
                    return out, False
                buf >>= np.uint64(q + 1)
                cnt -= q + 1
                low = np.int64(buf & np.uint64((1 << k) - 1))
                buf >>= np.uint64(k)
                cnt -= k
                m = (q << k) | low
            else:
                if ESCAPE + bit_depth > cnt:
                    return out, False
                buf >>= np.uint64(ESCAPE)
                cnt -= ESCAPE
                m = np.int64(buf & np.uint64(mask))
                buf >>= np.uint64(bit_depth)
                cnt -= bit_depth
            e = (m >> 1) if (m & 1) == 0 else -((m + 1) >> 1)
            abs_sum += e if e >= 0 else -e
            out[r, c] = (_predict(out, r, c) + e) & mask
        k = _row_k(abs_sum, cols, bit_depth)
    return out, True


def encode_plane(plane: np.ndarray, bit_depth: int) -> bytes:
    """Encode one (rows, cols) plane; the first byte carries the row-0 k."""
    arr = np.ascontiguousarray(plane)
    if arr.ndim != 2:
        raise ValueError("plane must be 2-D")
    stream, first = _encode(arr.astype(np.int64), bit_depth)
    return bytes([first]) + stream.tobytes()


def decode_plane(data: bytes, rows: int, cols: int, bit_depth: int) -> np.ndarray:
    if not data:
        raise GolombError("empty Golomb-Rice stream")
    first = data[0]
    if first > bit_depth:
        raise GolombError(f"invalid initial Rice parameter {first}")
    out, ok = _decode(np.frombuffer(data[1:], dtype=np.uint8), rows, cols, bit_depth, first)
    if not ok:
        raise GolombError("truncated or corrupt Golomb-Rice stream")
    return out.astype(np.uint8 if bit_depth == 8 else np.uint16)
