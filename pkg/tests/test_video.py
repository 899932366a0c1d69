import numpy as np
import pytest
from hypothesis import given

from lidarpcc.codecs import deflate, image, video
from lidarpcc.codecs.container import BlobError, CompressedBlob
from lidarpcc.metrics import psnr_point_to_plane
from lidarpcc.projection import Layout, project, unproject
from strategies import random_image, sequences


def same_image(a, b):
    return (np.array_equal(a.pixels, b.pixels) and np.array_equal(a.validity, b.validity)
            and a.metas == b.metas and a.layout == b.layout and a.axis == b.axis)


@given(sequences())
def test_interframe_roundtrip_at_8_bit(seq):
    blob = video.interframe_encode(seq)
    out = video.interframe_decode(CompressedBlob.from_bytes(blob.to_bytes()))
    assert len(out) == len(seq)
    for a, b in zip(seq, out):
        assert same_image(video.to_8bit(a), b)


@given(sequences())
def test_intraframe_random_access(seq):
    data = video.intraframe_encode(seq).to_bytes()
    assert video.frame_count(data) == len(seq)
    for i in reversed(range(len(seq))):
        assert same_image(video.decode_frame(data, i), video.to_8bit(seq[i]))


def test_to_8bit_keeps_high_byte(rng):
    img = random_image(rng, 4, 10, Layout.SPHERICAL, 16, "uniform")
    low = video.to_8bit(img)
    assert low.bit_depth == 8 and all(m.bit_depth == 8 for m in low.metas)
    assert np.array_equal(low.pixels, img.pixels >> 8)
    assert video.to_8bit(low) is low


def test_identical_frames_grow_sublinearly(rng):
    frame = random_image(rng, 16, 360, Layout.SPHERICAL, 8, "uniform")
    one = len(video.interframe_encode([frame]).payload)
    ten = len(video.interframe_encode([frame] * 10).payload)
    assert ten < 2 * one


def test_single_frame_matches_dictionary_codec(rng):
    frame = random_image(rng, 8, 64, Layout.CARTESIAN_TRI, 8, "smooth")
    seq_payload = video.interframe_encode([frame]).payload
    img_payload = image.dictionary_encode(frame).payload
    # the image codec deflates the planes back to back, the video codec each plane on its own
    planes = [frame.pixels[c].tobytes() for c in range(frame.channels)]
    assert seq_payload == b"".join(deflate.compress(p) for p in planes)
    assert img_payload == deflate.compress(b"".join(planes))
    assert abs(len(seq_payload) - len(img_payload)) <= 16 * frame.channels


def test_corrupt_segment_stays_local(rng):
    seq = [random_image(rng, 6, 40, Layout.SPHERICAL, 8, "smooth") for _ in range(4)]
    grid = seq[0].grid
    for img in seq:
        img.grid = grid
    blob = video.intraframe_encode(seq)
    j = 2
    off = sum(video.segment_sizes(blob)[:j])
    payload = bytearray(blob.payload)
    payload[off: off + 4] = b"\xff\xff\xff\xff"  # wreck frame j's segment prefix
    broken = CompressedBlob(blob.codec_id, blob.header, bytes(payload))
    for i in range(4):
        if i == j:
            with pytest.raises(BlobError):
                video.decode_frame(broken, i)
        else:
            assert same_image(video.decode_frame(broken, i), seq[i])


def test_constant_sequence_has_equal_segments(rng):
    frame = random_image(rng, 8, 50, Layout.SPHERICAL, 8, "sparse")
    sizes = video.segment_sizes(video.intraframe_encode([frame] * 5))
    assert len(set(sizes)) == 1


def test_errors(rng):
    a = random_image(rng, 4, 8, Layout.SPHERICAL, 8, "uniform")
    b = random_image(rng, 4, 8, Layout.CARTESIAN_TRI, 8, "uniform", grid=a.grid)
    with pytest.raises(ValueError):
        video.interframe_encode([a, b])
    with pytest.raises(ValueError):
        video.intraframe_encode([])
    blob = video.intraframe_encode([a, a])
    with pytest.raises(IndexError):
        video.decode_frame(blob, 2)
    with pytest.raises(IndexError):
        video.decode_frame(blob, -1)
    with pytest.raises(BlobError):
        video.interframe_decode(blob)
    with pytest.raises(BlobError):
        video.decode_frame(video.interframe_encode([a]), 0)


def test_interframe_beats_per_frame_dictionary(synth_frames, vlp_grid):
    seq = [video.to_8bit(project(f, vlp_grid, Layout.SPHERICAL, 16)) for f in synth_frames[:10]]
    inter = len(video.interframe_encode(seq).to_bytes())
    per_frame = sum(len(image.dictionary_encode(img).to_bytes()) for img in seq)
    assert inter <= per_frame


def test_8_bit_path_loses_at_least_20_db(synth_frames, vlp_grid):
    frame = synth_frames[0]
    img16 = project(frame, vlp_grid, Layout.SPHERICAL, 16)
    p16 = psnr_point_to_plane(frame, unproject(image.predictive_decode(image.predictive_encode(img16).to_bytes())))
    rec8 = video.interframe_decode(video.interframe_encode([img16]).to_bytes())[0]
    p8 = psnr_point_to_plane(frame, unproject(rec8))
    assert p8 <= p16 - 20
