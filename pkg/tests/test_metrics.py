import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lidarpcc import metrics
from lidarpcc.cloud import PointCloud
from lidarpcc.metrics import MetricsReport, NeighborIndex
import oracles


def surface_cloud(rng, n):
    """Points on a gently curved sheet a few metres from the origin, plus jitter."""
    uv = rng.uniform(-1, 1, (n, 2))
    z = 0.3 * np.sin(2 * uv[:, 0]) + 0.2 * uv[:, 1] ** 2
    pts = np.column_stack([uv[:, 0] + 5, uv[:, 1], z])
    return pts + rng.normal(0, 1e-3, pts.shape)


def degraded(rng, pts):
    """A plausible reconstruction: noise, some points dropped, a few added."""
    keep = rng.random(len(pts)) > rng.uniform(0, 0.2)
    out = pts[keep] + rng.normal(0, rng.choice([1e-4, 1e-3, 1e-2]), (keep.sum(), 3))
    extra = rng.integers(0, 5)
    if extra:
        out = np.vstack([out, pts[rng.integers(0, len(pts), extra)] + rng.normal(0, 0.05, (extra, 3))])
    return out


def test_psnr_matches_brute_force_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(10, 501))
        p = surface_cloud(rng, n)
        q = degraded(rng, p)
        k = int(rng.choice([3, 5, 8]))
        got = metrics.psnr_point_to_plane(PointCloud(p), PointCloud(q), k)
        want = oracles.psnr(p, q, k)
        worst = max(worst, abs(got - want))
    assert worst <= 1e-9


def test_psnr_oracle_on_quantized_duplicates():
    # lattice points: many equidistant neighbours, exercising the tie-break
    rng = np.random.default_rng(3)
    p = rng.integers(0, 6, (300, 3)).astype(float) * 0.1 + np.array([3.0, 0, 0])
    p = np.unique(p, axis=0)
    q = p + rng.integers(-1, 2, p.shape) * 0.05
    assert abs(metrics.psnr_point_to_plane(p, q) - oracles.psnr(p, q)) <= 1e-9


@given(st.integers(0, 2**32 - 1), st.integers(2, 400), st.integers(1, 12), st.booleans())
def test_neighbor_index_is_exact(seed, n, k, lattice):
    rng = np.random.default_rng(seed)
    if lattice:
        ref = rng.integers(0, 4, (n, 3)).astype(float)  # heavy ties and duplicates
        q = rng.integers(0, 4, (50, 3)).astype(float) + rng.choice([0, 0.5], (50, 3))
    else:
        ref = rng.normal(0, 1, (n, 3))
        q = rng.normal(0, 1, (50, 3))
    idx = NeighborIndex(ref)
    d2, nn = idx.query(q)
    want_d2, want_nn = oracles.nearest(q, ref)
    assert np.array_equal(nn, want_nn)
    assert np.array_equal(d2, want_d2)
    kk = min(k, n)
    _, knn = idx.knn(q, k)
    for row, point in zip(knn, q):
        assert row.tolist() == oracles.knn(point, ref, kk).tolist()


def test_neighbor_index_large_cloud_with_ties():
    rng = np.random.default_rng(11)
    ref = rng.integers(0, 25, (10_000, 3)).astype(float)
    q = rng.integers(0, 25, (500, 3)) + rng.choice([0.0, 0.5], (500, 3))
    _, nn = NeighborIndex(ref).query(q)
    _, want = oracles.nearest(q, ref)
    assert np.array_equal(nn, want)


def test_normal_of_flat_plane(rng):
    pts = np.column_stack([rng.uniform(-2, 2, 50), rng.uniform(-2, 2, 50), np.zeros(50)])
    est = metrics.estimate_normal(PointCloud(pts), [0.3, -0.2, 0.0])
    assert not est.degenerate
    assert np.allclose(np.abs(est.normal), [0, 0, 1], atol=1e-9)


def test_normal_of_tilted_plane_faces_origin(rng):
    uv = rng.uniform(-1, 1, (40, 2))
    pts = np.column_stack([uv[:, 0], uv[:, 1], 1 - uv[:, 0] - uv[:, 1]])
    at = pts[0]
    est = metrics.estimate_normal(pts, at, k=8)
    assert np.allclose(est.normal, -np.ones(3) / math.sqrt(3), atol=1e-9)
    assert est.normal @ (np.zeros(3) - at) > 0


def test_collinear_neighbourhood_is_flagged():
    pts = np.array([[0, 0, 0], [1, 1, 1], [2, 2, 2]], float)
    assert metrics.estimate_normal(pts, [1, 1, 1], k=3).degenerate
    with pytest.raises(ValueError):
        metrics.estimate_normal(pts[:2], [0, 0, 0], k=3)
    with pytest.raises(ValueError):
        metrics.estimate_normal(pts, [0, 0, 0], k=2)


def test_four_point_translated_plane():
    p = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], float)
    q = p + [0, 0, 0.001]
    d = metrics.psnr_detail(p, q, k=3)
    assert d.mse_forward == pytest.approx(1e-6, rel=1e-9)
    assert d.mse_backward == pytest.approx(1e-6, rel=1e-9)
    assert d.peak_forward == d.peak_backward == 1.0
    assert d.psnr_db == pytest.approx(10 * math.log10(1.0 / 1e-6), abs=1e-9)
    assert d.psnr_db == pytest.approx(oracles.psnr(p, q, 3), abs=1e-9)


def test_identical_clouds_are_infinite(rng):
    p = surface_cloud(rng, 100)
    assert metrics.psnr_point_to_plane(p, p.copy()) == math.inf


def test_psnr_errors():
    with pytest.raises(ValueError):
        metrics.psnr_point_to_plane([[0, 0, 0]], [[0, 0, 0], [1, 1, 1]])
    with pytest.raises(ValueError):
        metrics.psnr_point_to_plane(np.empty((0, 3)), [[0, 0, 0], [1, 1, 1]])


def test_tiny_reference_falls_back_to_point_distance():
    p = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float)
    q = np.array([[0, 0, 0.1], [1, 0, 0]], float)
    d = metrics.psnr_detail(p, q)
    assert d.degenerate_forward == 3
    assert d.psnr_db == pytest.approx(oracles.psnr(p, q), abs=1e-9)


def test_psnr_is_symmetric(rng):
    p = surface_cloud(rng, 300)
    q = degraded(rng, p)
    assert metrics.psnr_point_to_plane(p, q) == metrics.psnr_point_to_plane(q, p)


def test_rate_and_bpp():
    assert metrics.compression_rate(500, 500) == 0.0
    assert metrics.compression_rate(0, 500) == 1.0
    assert metrics.compression_rate(750, 500) == -0.5  # expansion is reported as is
    assert metrics.bpp(100, 100) == 1.0
    with pytest.raises(ValueError):
        metrics.compression_rate(1, 0)
    with pytest.raises(ValueError):
        metrics.bpp(1, 0)


@given(st.integers(0, 10**7), st.integers(1, 10**6), st.integers(1, 10**8))
def test_rate_and_bpp_are_consistent(comp, points, raw):
    rate = metrics.compression_rate(comp, raw)
    assert rate == pytest.approx(1 - metrics.bpp(comp, points) * points / raw, rel=1e-12, abs=1e-12)


def test_timed_noop():
    result, seconds = metrics.timed(lambda: 42)
    assert result == 42
    assert 0 <= seconds < 1e-3


def test_report_row_format():
    assert ",".join(metrics.CSV_HEADER) == "codec,frame,points,raw_bytes,comp_bytes,rate,bpp,psnr_db,enc_s,dec_s"
    rep = MetricsReport("mycodec", 0, 1000, 100_000, 25000.0, 0.75, 1.26, math.inf, None, None)
    row = rep.row()
    assert row == ["mycodec", "0", "1000", "100000", "25000.0", "0.75", "1.26", "inf", "", ""]
    assert MetricsReport.from_row(row) == rep
    assert metrics.format_value(-math.inf) == "-inf"
