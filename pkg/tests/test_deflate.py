import zlib

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lidarpcc.codecs import deflate


def zlib_inflate(stream: bytes) -> bytes:
    d = zlib.decompressobj(-15)
    out = d.decompress(stream) + d.flush()
    assert d.eof
    return out


def zlib_deflate(data: bytes, level: int) -> bytes:
    c = zlib.compressobj(level, zlib.DEFLATED, -15)
    return c.compress(data) + c.flush()


CORPUS = {
    "empty": b"",
    "one": b"a",
    "text": b"the quick brown fox jumps over the lazy dog " * 300,
    "zeros": bytes(200_000),
    "random": np.random.default_rng(1).integers(0, 256, 100_000, dtype=np.uint8).tobytes(),
    "ramp16": np.arange(40_000, dtype="<u2").tobytes(),
    "long_stored": np.random.default_rng(2).integers(0, 256, 150_000, dtype=np.uint8).tobytes(),
}


@pytest.mark.parametrize("name", CORPUS)
def test_zlib_reads_our_streams(name):
    data = CORPUS[name]
    assert zlib_inflate(deflate.compress(data)) == data


@pytest.mark.parametrize("name", CORPUS)
@pytest.mark.parametrize("level", [0, 1, 6, 9])
def test_we_read_zlib_streams(name, level):
    data = CORPUS[name]
    assert deflate.decompress(zlib_deflate(data, level)) == data


def test_size_close_to_zlib_on_text():
    data = CORPUS["text"] + CORPUS["ramp16"]
    ours, ref = len(deflate.compress(data)), len(zlib_deflate(data, 6))
    assert ours <= 1.1 * ref


def test_zero_plane_collapses():
    plane = bytes(2 * 16 * 1800)
    out = deflate.compress(plane)
    assert len(out) <= 0.01 * len(plane)
    assert len(out) == 72  # frozen golden


def test_incompressible_uses_stored_blocks():
    data = CORPUS["random"]
    out = deflate.compress(data)
    assert len(out) >= 0.99 * len(data)
    # stored blocks add only a few bytes of framing per block
    assert len(out) <= 1.001 * len(data)
    assert deflate.decompress(out) == data


def test_golden_small_stream():
    assert deflate.compress(b"hello hello hello hello").hex() == "cb48cdc9c957c02001"
    assert deflate.compress(b"").hex() == "0300"


@given(st.binary(max_size=5000))
def test_roundtrip_binary(data):
    out = deflate.compress(data)
    assert deflate.decompress(out) == data
    assert zlib_inflate(out) == data


@given(st.lists(st.sampled_from([b"ab", b"abc", b"\x00\x00", b"xyzxyz", b"q"]), max_size=3000),
       st.integers(1, 128), st.booleans())
def test_roundtrip_repetitive(parts, chain, lazy):
    data = b"".join(parts)
    out = deflate.compress(data, max_chain=chain, lazy=lazy)
    assert deflate.decompress(out) == data == zlib_inflate(out)


def test_corruption_is_detected_never_silent():
    data = CORPUS["text"]
    good = deflate.compress(data)
    rng = np.random.default_rng(0)
    detected = 0
    for _ in range(300):
        bad = bytearray(good)
        pos = int(rng.integers(0, len(bad)))
        bad[pos] ^= 1 << int(rng.integers(0, 8))
        try:
            out = deflate.decompress(bytes(bad))
        except deflate.DeflateError:
            detected += 1
            continue
        # anything that still decodes must agree with zlib on the same bytes
        try:
            ref = zlib_inflate(bytes(bad))
        except (zlib.error, AssertionError):
            pytest.fail("accepted a stream zlib rejects")
        assert out == ref
    assert detected > 0


@pytest.mark.parametrize("stream", [
    b"",  # no blocks at all
    b"\x07",  # reserved block type 3
    b"\x01\x05\x00\xfa\xff",  # stored length / complement mismatch
    b"\x01\x05\x00\xfa",  # truncated stored header
])
def test_malformed_streams_raise(stream):
    with pytest.raises(deflate.DeflateError):
        deflate.decompress(stream)


def test_distance_beyond_window_start():
    # fixed Huffman block with a single match of length 3 at distance 1 and no literal before it
    c = zlib.compressobj(9, zlib.DEFLATED, -15, strategy=zlib.Z_FIXED)
    good = c.compress(b"aaaa") + c.flush()
    assert deflate.decompress(good) == b"aaaa"
    # strip the leading literal: the same bits now reference data that does not exist
    with pytest.raises(deflate.DeflateError):
        deflate.decompress(bytes([0x03, 0x02, 0x00]))


@given(st.lists(st.integers(0, 10**6), min_size=2, max_size=300), st.sampled_from([7, 15]))
def test_huffman_lengths_are_limited_and_complete(freqs, limit):
    freqs = np.array(freqs)
    if (freqs > 0).sum() > 2 ** limit:
        return
    lengths = deflate.huffman_lengths(freqs, limit)
    used = freqs > 0
    if used.sum() < 2:
        # padded to two one-bit codes so the prefix code stays complete
        assert sorted(lengths[lengths > 0].tolist()) == [1, 1] and np.all(lengths[used] == 1)
        return
    assert np.all(lengths[~used] == 0)
    assert np.all(lengths[used] >= 1) and lengths.max() <= limit
    if used.sum() >= 2:
        kraft = np.sum(2.0 ** -lengths[used].astype(float))
        assert kraft == pytest.approx(1.0)


def test_huffman_limit_on_fibonacci_weights():
    fib = [1, 1]
    while len(fib) < 30:
        fib.append(fib[-1] + fib[-2])
    lengths = deflate.huffman_lengths(np.array(fib), 15)
    assert lengths.max() == 15
    assert np.sum(2.0 ** -lengths.astype(float)) == pytest.approx(1.0)


def test_canonical_codes_are_prefix_free():
    lengths = np.array([3, 3, 3, 3, 3, 2, 4, 4])
    codes = deflate.canonical_codes(lengths)
    # worked example of the RFC; codes come back bit-reversed for LSB-first output
    assert [format(int(c), f"0{l}b")[::-1] for c, l in zip(codes, lengths)] == [
        "010", "011", "100", "101", "110", "00", "1110", "1111"]
