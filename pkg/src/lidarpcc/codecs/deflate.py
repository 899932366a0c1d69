"""LZ77 + canonical Huffman coder producing a raw RFC 1951 deflate stream.

32 KiB window, hash-chain match search with one-step lazy evaluation, and a
per-block choice between dynamic Huffman, fixed Huffman and stored blocks, so
incompressible input never grows by more than a few bytes per 64 KiB.
"""

from __future__ import annotations

import numpy as np
from numba import njit

WINDOW = 32768
MAX_MATCH = 258
MIN_MATCH = 3
BLOCK_TOKENS = 1 << 15
STORED_MAX = 65535

LEN_BASE = np.array([3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15, 17, 19, 23, 27, 31, 35, 43, 51, 59, 67, 83, 99, 115,
                     131, 163, 195, 227, 258], dtype=np.int64)
LEN_EXTRA = np.array([0] * 8 + [1] * 4 + [2] * 4 + [3] * 4 + [4] * 4 + [5] * 4 + [0], dtype=np.int64)
DIST_BASE = np.array([1, 2, 3, 4, 5, 7, 9, 13, 17, 25, 33, 49, 65, 97, 129, 193, 257, 385, 513, 769, 1025, 1537,
                      2049, 3073, 4097, 6145, 8193, 12289, 16385, 24577], dtype=np.int64)
DIST_EXTRA = np.array([0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8, 9, 9, 10, 10, 11, 11, 12, 12,
                       13, 13], dtype=np.int64)
CL_ORDER = [16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15]


def _code_lookup(bases, top):
    table = np.zeros(top + 1, dtype=np.int64)
    for code in range(len(bases)):
        table[bases[code]:] = code
    return table


LEN_CODE = _code_lookup(LEN_BASE, MAX_MATCH)  # match length -> index into LEN_BASE
DIST_CODE = _code_lookup(DIST_BASE, WINDOW)

FIXED_LIT_LENGTHS = np.array([8] * 144 + [9] * 112 + [7] * 24 + [8] * 8, dtype=np.int64)
FIXED_DIST_LENGTHS = np.full(30, 5, dtype=np.int64)

# inflate error codes
_OK, _E_BTYPE, _E_STORED_LEN, _E_CODE, _E_DIST, _E_EOF, _E_TREE = 0, 1, 2, 3, 4, 5, 6
_ERRORS = {
    _E_BTYPE: "invalid block type",
    _E_STORED_LEN: "stored block length does not match its complement",
    _E_CODE: "invalid Huffman code",
    _E_DIST: "match distance reaches before the start of the output",
    _E_EOF: "unexpected end of stream",
    _E_TREE: "malformed Huffman table",
}


class DeflateError(ValueError):
    pass


# --------------------------------------------------------------------------- LZ77


@njit(cache=True)
def _longest_match(data, pos, cand, prev, max_chain, min_len, n):
    best_len = min_len
    best_dist = 0
    max_len = min(MAX_MATCH, n - pos)
    if best_len >= max_len:
        return best_len, 0
    chain = max_chain
    while cand >= 0 and pos - cand <= WINDOW and chain > 0:
        if data[cand + best_len] == data[pos + best_len]:
            length = 0
            while length < max_len and data[cand + length] == data[pos + length]:
                length += 1
            if length > best_len:
                best_len = length
                best_dist = pos - cand
                if length >= max_len:
                    break
        nxt = prev[cand & (WINDOW - 1)]
        if nxt >= cand:
            break
        cand = nxt
        chain -= 1
    return best_len, best_dist


@njit(cache=True)
def _lz77(data, max_chain, nice_len, lazy):
    n = data.shape[0]
    hbits = 15
    hmask = (1 << hbits) - 1
    head = np.full(1 << hbits, -1, dtype=np.int32)
    prev = np.full(WINDOW, -1, dtype=np.int32)
    lit = np.empty(n + 1, dtype=np.int32)  # literal byte, or match length when dist > 0
    dist = np.empty(n + 1, dtype=np.int32)
    tpos = np.empty(n + 1, dtype=np.int64)
    ntok = 0
    ins = 0  # next position to enter into the hash chains
    i = 0
    have_next = False
    next_len = 0
    next_dist = 0
    while i < n:
        if have_next:
            l1 = next_len
            d1 = next_dist
            have_next = False
        else:
            l1 = 0
            d1 = 0
            if i + MIN_MATCH <= n:
                while ins < i:
                    if ins + MIN_MATCH <= n:
                        h = ((data[ins] << 10) ^ (data[ins + 1] << 5) ^ data[ins + 2]) & hmask
                        prev[ins & (WINDOW - 1)] = head[h]
                        head[h] = ins
                    ins += 1
                h = ((data[i] << 10) ^ (data[i + 1] << 5) ^ data[i + 2]) & hmask
                l1, d1 = _longest_match(data, i, head[h], prev, max_chain, MIN_MATCH - 1, n)
                if l1 == MIN_MATCH and d1 > 4096:
                    l1 = 0
                if l1 < MIN_MATCH:
                    l1 = 0
        if l1 >= MIN_MATCH and lazy and l1 < nice_len and i + 1 + MIN_MATCH <= n:
            while ins < i + 1:
                if ins + MIN_MATCH <= n:
                    h = ((data[ins] << 10) ^ (data[ins + 1] << 5) ^ data[ins + 2]) & hmask
                    prev[ins & (WINDOW - 1)] = head[h]
                    head[h] = ins
                ins += 1
            h = ((data[i + 1] << 10) ^ (data[i + 2] << 5) ^ data[i + 3]) & hmask
            l2, d2 = _longest_match(data, i + 1, head[h], prev, max_chain >> 1, l1, n)
            if l2 > l1:
                lit[ntok] = data[i]
                dist[ntok] = 0
                tpos[ntok] = i
                ntok += 1
                i += 1
                have_next = True
                next_len = l2
                next_dist = d2
                continue
        if l1 >= MIN_MATCH:
            lit[ntok] = l1
            dist[ntok] = d1
            tpos[ntok] = i
            ntok += 1
            i += l1
        else:
            lit[ntok] = data[i]
            dist[ntok] = 0
            tpos[ntok] = i
            ntok += 1
            i += 1
    tpos[ntok] = n
    return lit[:ntok], dist[:ntok], tpos[: ntok + 1]


@njit(cache=True)
def _symbol_freqs(lit, dist, start, end, len_code, dist_code):
    lf = np.zeros(286, dtype=np.int64)
    df = np.zeros(30, dtype=np.int64)
    for t in range(start, end):
        if dist[t] == 0:
            lf[lit[t]] += 1
        else:
            lf[257 + len_code[lit[t]]] += 1
            df[dist_code[dist[t]]] += 1
    lf[256] += 1
    return lf, df


# --------------------------------------------------------------------------- bit output


@njit(cache=True)
def _put(out, state, value, nbits):
    buf = state[1] | (value << state[2])
    cnt = state[2] + nbits
    pos = state[0]
    while cnt >= 8:
        out[pos] = buf & 0xFF
        pos += 1
        buf >>= 8
        cnt -= 8
    state[0] = pos
    state[1] = buf
    state[2] = cnt


@njit(cache=True)
def _put_many(out, state, values, nbits):
    for k in range(values.shape[0]):
        _put(out, state, values[k], nbits[k])


@njit(cache=True)
def _align(out, state):
    if state[2] > 0:
        out[state[0]] = state[1] & 0xFF
        state[0] += 1
    state[1] = 0
    state[2] = 0


@njit(cache=True)
def _put_stored(out, state, data, start, end, final):
    pos = start
    while True:
        chunk = min(STORED_MAX, end - pos)
        last = final and pos + chunk >= end
        _put(out, state, 1 if last else 0, 3)
        _align(out, state)
        p = state[0]
        out[p] = chunk & 0xFF
        out[p + 1] = chunk >> 8
        out[p + 2] = (~chunk) & 0xFF
        out[p + 3] = ((~chunk) >> 8) & 0xFF
        out[p + 4: p + 4 + chunk] = data[pos: pos + chunk]
        state[0] = p + 4 + chunk
        pos += chunk
        if pos >= end:
            break


@njit(cache=True)
def _put_tokens(out, state, lit, dist, start, end, lcode, llen, dcode, dlen):
    for t in range(start, end):
        d = dist[t]
        if d == 0:
            s = lit[t]
            _put(out, state, lcode[s], llen[s])
        else:
            ln = lit[t]
            c = LEN_CODE[ln]
            _put(out, state, lcode[257 + c], llen[257 + c])
            if LEN_EXTRA[c]:
                _put(out, state, ln - LEN_BASE[c], LEN_EXTRA[c])
            dc = DIST_CODE[d]
            _put(out, state, dcode[dc], dlen[dc])
            if DIST_EXTRA[dc]:
                _put(out, state, d - DIST_BASE[dc], DIST_EXTRA[dc])
    _put(out, state, lcode[256], llen[256])


# --------------------------------------------------------------------------- Huffman tables


@njit(cache=True)
def _huffman_lengths(freqs, limit):
    n = freqs.shape[0]
    f = freqs.copy()
    used = 0
    for s in range(n):
        if f[s] > 0:
            used += 1
    s = 0
    while used < 2 and s < n:
        if f[s] == 0:
            f[s] = 1
            used += 1
        s += 1
    syms = np.empty(used, dtype=np.int64)
    k = 0
    for s in range(n):
        if f[s] > 0:
            syms[k] = s
            k += 1
    m = used
    leaf = syms[np.argsort(f[syms], kind="mergesort")]  # ascending weight, ties by symbol
    weight = np.empty(2 * m - 1, dtype=np.int64)
    parent = np.zeros(2 * m - 1, dtype=np.int64)
    for i in range(m):
        weight[i] = f[leaf[i]]
    # two-queue construction: leaves in weight order, internal nodes in creation order
    li = 0
    ii = m
    nxt = m
    for _ in range(m - 1):
        pick = np.empty(2, dtype=np.int64)
        for j in range(2):
            if li < m and (ii >= nxt or weight[li] <= weight[ii]):
                pick[j] = li
                li += 1
            else:
                pick[j] = ii
                ii += 1
        weight[nxt] = weight[pick[0]] + weight[pick[1]]
        parent[pick[0]] = nxt
        parent[pick[1]] = nxt
        nxt += 1
    depth = np.zeros(2 * m - 1, dtype=np.int64)
    for node in range(2 * m - 3, -1, -1):
        depth[node] = depth[parent[node]] + 1
    lengths = np.zeros(n, dtype=np.int64)
    max_len = 0
    for i in range(m):
        lengths[leaf[i]] = depth[i]
        max_len = max(max_len, depth[i])
    if max_len <= limit:
        return lengths
    bl_count = np.zeros(max_len + 1, dtype=np.int64)
    for i in range(m):
        bl_count[depth[i]] += 1
    for i in range(max_len, limit, -1):
        while bl_count[i] > 0:
            j = i - 2
            while bl_count[j] == 0:
                j -= 1
            bl_count[i] -= 2
            bl_count[i - 1] += 1
            bl_count[j + 1] += 2
            bl_count[j] -= 1
    order = syms[np.argsort(-f[syms], kind="mergesort")]  # heaviest first, ties by symbol
    lengths[:] = 0
    k = 0
    for bits in range(1, limit + 1):
        for _ in range(bl_count[bits]):
            lengths[order[k]] = bits
            k += 1
    return lengths


def huffman_lengths(freqs, limit: int) -> np.ndarray:
    """Code lengths for ``freqs``, capped at ``limit`` bits.

    Two-queue Huffman construction followed by the Kraft-preserving length
    adjustment of JPEG Annex K.3 when the cap is exceeded. At least two
    symbols always receive a code so the result is a complete prefix code.
    """
    return _huffman_lengths(np.asarray(freqs, dtype=np.int64), limit)


@njit(cache=True)
def _canonical_codes(lengths):
    max_len = 0
    for ln in lengths:
        max_len = max(max_len, ln)
    bl_count = np.zeros(max_len + 2, dtype=np.int64)
    for ln in lengths:
        if ln:
            bl_count[ln] += 1
    next_code = np.zeros(max_len + 2, dtype=np.int64)
    code = 0
    for bits in range(1, max_len + 1):
        code = (code + bl_count[bits - 1]) << 1
        next_code[bits] = code
    codes = np.zeros(lengths.shape[0], dtype=np.int64)
    for sym in range(lengths.shape[0]):
        ln = lengths[sym]
        if ln:
            c = next_code[ln]
            next_code[ln] += 1
            r = 0
            for _ in range(ln):
                r = (r << 1) | (c & 1)
                c >>= 1
            codes[sym] = r
    return codes


def canonical_codes(lengths) -> np.ndarray:
    """Canonical codes, bit-reversed so they can be written LSB first."""
    return _canonical_codes(np.asarray(lengths, dtype=np.int64))


@njit(cache=True)
def _rle_lengths(lengths):
    """Run-length encode code lengths with symbols 16/17/18; returns (symbols, extra bits values)."""
    n = lengths.shape[0]
    sym = np.empty(n, dtype=np.int64)
    ext = np.zeros(n, dtype=np.int64)
    k = 0
    i = 0
    while i < n:
        cur = lengths[i]
        run = 1
        while i + run < n and lengths[i + run] == cur:
            run += 1
        i += run
        if cur == 0:
            while run >= 11:
                r = min(run, 138)
                sym[k] = 18
                ext[k] = r - 11
                k += 1
                run -= r
            if run >= 3:
                sym[k] = 17
                ext[k] = run - 3
                k += 1
                run = 0
        else:
            sym[k] = cur
            k += 1
            run -= 1
            while run >= 3:
                r = min(run, 6)
                sym[k] = 16
                ext[k] = r - 3
                k += 1
                run -= r
        for _ in range(run):
            sym[k] = cur
            k += 1
    return sym[:k], ext[:k]


_CL_ORDER = np.array(CL_ORDER, dtype=np.int64)
_CL_EXTRA = np.zeros(19, dtype=np.int64)
_CL_EXTRA[16:] = (2, 3, 7)


@njit(cache=True)
def _header_bits(llen, dlen, cl_order, cl_extra):
    hlit = 257
    for s in range(llen.shape[0]):
        if llen[s]:
            hlit = max(hlit, s + 1)
    hdist = 1
    for s in range(dlen.shape[0]):
        if dlen[s]:
            hdist = max(hdist, s + 1)
    sym, ext = _rle_lengths(np.concatenate((llen[:hlit], dlen[:hdist])))
    cl_freq = np.zeros(19, dtype=np.int64)
    for s in sym:
        cl_freq[s] += 1
    cl_len = _huffman_lengths(cl_freq, 7)
    cl_code = _canonical_codes(cl_len)
    hclen = 19
    while hclen > 4 and cl_len[cl_order[hclen - 1]] == 0:
        hclen -= 1
    size = 3 + hclen + 2 * sym.shape[0]
    vals = np.empty(size, dtype=np.int64)
    bits = np.empty(size, dtype=np.int64)
    vals[0], vals[1], vals[2] = hlit - 257, hdist - 1, hclen - 4
    bits[0], bits[1], bits[2] = 5, 5, 4
    k = 3
    for j in range(hclen):
        vals[k] = cl_len[cl_order[j]]
        bits[k] = 3
        k += 1
    for j in range(sym.shape[0]):
        s = sym[j]
        vals[k] = cl_code[s]
        bits[k] = cl_len[s]
        k += 1
        if cl_extra[s]:
            vals[k] = ext[j]
            bits[k] = cl_extra[s]
            k += 1
    return vals[:k], bits[:k]


def _dynamic_header(llen, dlen):
    """Return (values, nbits) for the dynamic block tree description, excluding BFINAL/BTYPE."""
    return _header_bits(llen, dlen, _CL_ORDER, _CL_EXTRA)


def _token_bits(lf, df, llen, dlen):
    extra = int((lf[257:] * LEN_EXTRA[: len(lf) - 257]).sum() + (df * DIST_EXTRA).sum())
    return int((lf * llen[: len(lf)]).sum() + (df * dlen[: len(df)]).sum()) + extra


FIXED_LIT_CODES = canonical_codes(FIXED_LIT_LENGTHS)
FIXED_DIST_CODES = canonical_codes(FIXED_DIST_LENGTHS)


def compress(data, max_chain: int = 64, nice_len: int = 128, lazy: bool = True) -> bytes:
    """Compress ``data`` to a raw deflate stream (decodable by ``zlib`` with wbits=-15)."""
    buf = np.frombuffer(bytes(data), dtype=np.uint8)
    n = len(buf)
    lit, dist, tpos = _lz77(buf, max_chain, nice_len, lazy)
    ntok = len(lit)
    out = np.zeros(n + 5 * (n // STORED_MAX + 1) + 1024 + n // 8, dtype=np.uint8)
    state = np.zeros(3, dtype=np.int64)
    if ntok == 0:
        _put(out, state, 0b011, 3)  # final fixed block
        _put(out, state, int(FIXED_LIT_CODES[256]), int(FIXED_LIT_LENGTHS[256]))
        _align(out, state)
        return out[: state[0]].tobytes()
    for start in range(0, ntok, BLOCK_TOKENS):
        end = min(start + BLOCK_TOKENS, ntok)
        final = 1 if end == ntok else 0
        lf, df = _symbol_freqs(lit, dist, start, end, LEN_CODE, DIST_CODE)
        llen = huffman_lengths(lf, 15)
        dlen = huffman_lengths(df, 15)
        hvals, hbits = _dynamic_header(llen, dlen)
        dyn_bits = 3 + int(hbits.sum()) + _token_bits(lf, df, llen, dlen)
        fix_bits = 3 + _token_bits(lf, df, FIXED_LIT_LENGTHS, FIXED_DIST_LENGTHS)
        span = int(tpos[end] - tpos[start])
        stored_bits = (span // STORED_MAX + 1) * (3 + 7 + 32) + 8 * span
        if stored_bits < min(dyn_bits, fix_bits):
            _put_stored(out, state, buf, tpos[start], tpos[end], final)
        elif dyn_bits <= fix_bits:
            _put(out, state, final | (2 << 1), 3)
            _put_many(out, state, hvals, hbits)
            _put_tokens(out, state, lit, dist, start, end, canonical_codes(llen), llen, canonical_codes(dlen), dlen)
        else:
            _put(out, state, final | (1 << 1), 3)
            _put_tokens(out, state, lit, dist, start, end, FIXED_LIT_CODES, FIXED_LIT_LENGTHS,
                        FIXED_DIST_CODES, FIXED_DIST_LENGTHS)
    _align(out, state)
    return out[: state[0]].tobytes()


# --------------------------------------------------------------------------- inflate


@njit(cache=True)
def _need(src, st, nbits):
    """Ensure ``nbits`` are buffered; returns False once the input is exhausted."""
    while st[2] < nbits:
        if st[0] >= src.shape[0]:
            return False
        st[1] |= np.int64(src[st[0]]) << st[2]
        st[0] += 1
        st[2] += 8
    return True


@njit(cache=True)
def _get(src, st, nbits):
    if nbits == 0:
        return 0
    if not _need(src, st, nbits):
        return -1
    v = st[1] & ((1 << nbits) - 1)
    st[1] >>= nbits
    st[2] -= nbits
    return v


@njit(cache=True)
def _build_table(lengths):
    """Lookup table indexed by the next ``max_len`` stream bits -> sym << 4 | len (or -1)."""
    max_len = 0
    for ln in lengths:
        if ln > max_len:
            max_len = ln
    if max_len == 0:
        return np.full(1, -1, dtype=np.int64), 0, True
    bl_count = np.zeros(16, dtype=np.int64)
    for ln in lengths:
        bl_count[ln] += 1
    bl_count[0] = 0
    left = 1
    for b in range(1, 16):
        left = (left << 1) - bl_count[b]
        if left < 0:
            return np.full(1, -1, dtype=np.int64), 0, False
    next_code = np.zeros(17, dtype=np.int64)
    code = 0
    for b in range(1, max_len + 1):
        code = (code + bl_count[b - 1]) << 1
        next_code[b] = code
    table = np.full(1 << max_len, -1, dtype=np.int64)
    for sym in range(lengths.shape[0]):
        ln = lengths[sym]
        if ln == 0:
            continue
        c = next_code[ln]
        next_code[ln] += 1
        rev = 0
        for b in range(ln):
            rev = (rev << 1) | ((c >> b) & 1)
        step = 1 << ln
        for k in range(rev, 1 << max_len, step):
            table[k] = (sym << 4) | ln
    return table, max_len, True


@njit(cache=True)
def _decode_sym(src, st, table, max_len):
    _need(src, st, max_len)  # may run short near the end; padded with zeros
    entry = table[st[1] & ((1 << max_len) - 1)]
    if entry < 0:
        return -1
    ln = entry & 15
    if ln > st[2]:
        return -2
    st[1] >>= ln
    st[2] -= ln
    return entry >> 4


@njit(cache=True)
def _grow(out, need):
    if need <= out.shape[0]:
        return out
    size = out.shape[0] * 2
    while size < need:
        size *= 2
    bigger = np.empty(size, dtype=np.uint8)
    bigger[: out.shape[0]] = out
    return bigger


@njit(cache=True)
def _inflate(src, size_hint):
    out = np.empty(max(size_hint, 1024), dtype=np.uint8)
    n = 0
    st = np.zeros(3, dtype=np.int64)  # byte pos, bit buffer, bit count
    fixed_l = np.zeros(288, dtype=np.int64)
    fixed_l[:144] = 8
    fixed_l[144:256] = 9
    fixed_l[256:280] = 7
    fixed_l[280:] = 8
    fixed_d = np.full(30, 5, dtype=np.int64)
    while True:
        final = _get(src, st, 1)
        btype = _get(src, st, 2)
        if final < 0 or btype < 0:
            return out[:n], _E_EOF
        if btype == 0:
            # drop the partial byte, hand back any whole bytes already buffered
            st[0] -= (st[2] - (st[2] & 7)) >> 3
            st[1] = 0
            st[2] = 0
            p = st[0]
            if p + 4 > src.shape[0]:
                return out[:n], _E_EOF
            ln = src[p] | (np.int64(src[p + 1]) << 8)
            nln = src[p + 2] | (np.int64(src[p + 3]) << 8)
            if ln != (~nln) & 0xFFFF:
                return out[:n], _E_STORED_LEN
            if p + 4 + ln > src.shape[0]:
                return out[:n], _E_EOF
            out = _grow(out, n + ln)
            out[n: n + ln] = src[p + 4: p + 4 + ln]
            n += ln
            st[0] = p + 4 + ln
        elif btype == 1 or btype == 2:
            if btype == 1:
                lt, lmax, ok1 = _build_table(fixed_l)
                dt, dmax, ok2 = _build_table(fixed_d)
            else:
                hlit = _get(src, st, 5)
                hdist = _get(src, st, 5)
                hclen = _get(src, st, 4)
                if hlit < 0 or hdist < 0 or hclen < 0:
                    return out[:n], _E_EOF
                hlit += 257
                hdist += 1
                hclen += 4
                if hlit > 286 or hdist > 30:
                    return out[:n], _E_TREE
                order = np.array([16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15])
                cl = np.zeros(19, dtype=np.int64)
                for k in range(hclen):
                    v = _get(src, st, 3)
                    if v < 0:
                        return out[:n], _E_EOF
                    cl[order[k]] = v
                ct, cmax, ok = _build_table(cl)
                if not ok or cmax == 0:
                    return out[:n], _E_TREE
                lens = np.zeros(hlit + hdist, dtype=np.int64)
                k = 0
                while k < hlit + hdist:
                    sym = _decode_sym(src, st, ct, cmax)
                    if sym < 0:
                        return out[:n], _E_CODE if sym == -1 else _E_EOF
                    if sym < 16:
                        lens[k] = sym
                        k += 1
                        continue
                    if sym == 16:
                        if k == 0:
                            return out[:n], _E_TREE
                        val = lens[k - 1]
                        rep = 3 + _get(src, st, 2)
                    elif sym == 17:
                        val = 0
                        rep = 3 + _get(src, st, 3)
                    else:
                        val = 0
                        rep = 11 + _get(src, st, 7)
                    if rep < 3 or k + rep > hlit + hdist:
                        return out[:n], _E_TREE
                    lens[k: k + rep] = val
                    k += rep
                if lens[256] == 0:
                    return out[:n], _E_TREE
                lt, lmax, ok1 = _build_table(lens[:hlit])
                dt, dmax, ok2 = _build_table(lens[hlit:])
            if not ok1 or not ok2:
                return out[:n], _E_TREE
            while True:
                sym = _decode_sym(src, st, lt, lmax)
                if sym < 0:
                    return out[:n], _E_CODE if sym == -1 else _E_EOF
                if sym < 256:
                    out = _grow(out, n + 1)
                    out[n] = sym
                    n += 1
                    continue
                if sym == 256:
                    break
                c = sym - 257
                if c >= 29:
                    return out[:n], _E_CODE
                ext = _get(src, st, LEN_EXTRA[c])
                if ext < 0:
                    return out[:n], _E_EOF
                length = LEN_BASE[c] + ext
                if dmax == 0:
                    return out[:n], _E_CODE
                dc = _decode_sym(src, st, dt, dmax)
                if dc < 0:
                    return out[:n], _E_CODE if dc == -1 else _E_EOF
                if dc >= 30:
                    return out[:n], _E_CODE
                ext = _get(src, st, DIST_EXTRA[dc])
                if ext < 0:
                    return out[:n], _E_EOF
                d = DIST_BASE[dc] + ext
                if d > n:
                    return out[:n], _E_DIST
                out = _grow(out, n + length)
                for k in range(length):
                    out[n + k] = out[n - d + k]
                n += length
        else:
            return out[:n], _E_BTYPE
        if final == 1:
            break
    return out[:n], _OK


def decompress(stream, size_hint: int = 0) -> bytes:
    src = np.frombuffer(bytes(stream), dtype=np.uint8)
    out, err = _inflate(src, max(size_hint, 4 * len(src)))
    if err != _OK:
        raise DeflateError(_ERRORS[err])
    return out.tobytes()
