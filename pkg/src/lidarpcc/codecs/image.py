"""Lossless range image codecs: a dictionary (LZ77 + Huffman) coder in the
role of PNG and a predictive (median + Golomb-Rice) coder in the role of
JPEG-LS."""

from __future__ import annotations

import struct

import numpy as np

from ..projection import RangeImage
from . import deflate, loco
from .container import BlobError, CodecId, CompressedBlob, pack_image_header, unpack_image_header


def _header(image: RangeImage) -> bytes:
    return pack_image_header(image.layout, image.axis, image.bit_depth, image.metas, image.validity, image.grid)


def _planes_bytes(image: RangeImage) -> bytes:
    dtype = "<u2" if image.bit_depth == 16 else "u1"
    return np.ascontiguousarray(image.pixels, dtype=dtype).tobytes()


def _image_from(hdr, pixels) -> RangeImage:
    return RangeImage(pixels, hdr.metas, hdr.validity, hdr.layout, hdr.grid, axis=hdr.axis)


def dictionary_encode(image: RangeImage, max_chain: int = 64) -> CompressedBlob:
    """Channels are written planar, 16-bit samples little-endian, then deflated."""
    payload = deflate.compress(_planes_bytes(image), max_chain=max_chain)
    return CompressedBlob(CodecId.DICTIONARY, _header(image), payload)


def dictionary_decode(blob) -> RangeImage:
    if isinstance(blob, (bytes, bytearray)):
        blob = CompressedBlob.from_bytes(bytes(blob))
    if blob.codec_id != CodecId.DICTIONARY:
        raise BlobError(f"expected a dictionary blob, got {blob.codec_id.name}")
    hdr, _ = unpack_image_header(blob.header)
    rows, cols = hdr.grid.rows, hdr.grid.cols
    channels = len(hdr.metas)
    width = 2 if hdr.bit_depth == 16 else 1
    expected = channels * rows * cols * width
    try:
        raw = deflate.decompress(blob.payload, size_hint=expected)
    except deflate.DeflateError as exc:
        raise BlobError(f"corrupt dictionary payload: {exc}") from None
    if len(raw) != expected:
        raise BlobError(f"decoded {len(raw)} bytes, expected {expected}")
    dtype = np.dtype("<u2") if width == 2 else np.dtype(np.uint8)
    pixels = np.frombuffer(raw, dtype=dtype).reshape(channels, rows, cols)
    return _image_from(hdr, pixels.astype(np.uint16 if width == 2 else np.uint8))


def predictive_encode(image: RangeImage) -> CompressedBlob:
    streams = [loco.encode_plane(image.pixels[c], image.bit_depth) for c in range(image.channels)]
    header = _header(image) + b"".join(struct.pack("<I", len(s)) for s in streams)
    return CompressedBlob(CodecId.PREDICTIVE, header, b"".join(streams))


def predictive_decode(blob) -> RangeImage:
    if isinstance(blob, (bytes, bytearray)):
        blob = CompressedBlob.from_bytes(bytes(blob))
    if blob.codec_id != CodecId.PREDICTIVE:
        raise BlobError(f"expected a predictive blob, got {blob.codec_id.name}")
    hdr, pos = unpack_image_header(blob.header)
    channels = len(hdr.metas)
    try:
        lengths = struct.unpack_from(f"<{channels}I", blob.header, pos)
    except struct.error:
        raise BlobError("missing per-channel stream lengths") from None
    if sum(lengths) != len(blob.payload):
        raise BlobError("channel stream lengths do not add up to the payload size")
    planes, off = [], 0
    for ln in lengths:
        try:
            planes.append(loco.decode_plane(blob.payload[off: off + ln], hdr.grid.rows, hdr.grid.cols, hdr.bit_depth))
        except loco.GolombError as exc:
            raise BlobError(str(exc)) from None
        off += ln
    return _image_from(hdr, np.stack(planes))
