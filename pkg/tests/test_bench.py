import csv
import dataclasses
import math
import shutil

import pytest

from lidarpcc import bench, cli
from lidarpcc.cloud import PointCloud
from lidarpcc.ingest import CaptureStream, parse_velodyne_pcap, write_pcd
from lidarpcc.metrics import CSV_HEADER

TIMING = {"enc_s", "dec_s"}


@pytest.fixture(scope="module")
def small_capture(tmp_path_factory):
    path = tmp_path_factory.mktemp("bench") / "three.pcap"
    assert cli.main(["synth", "--out", str(path), "--frames", "3", "--seed", "5"]) == 0
    return path


@pytest.fixture(scope="module")
def pcd_frames(small_capture, tmp_path_factory):
    d = tmp_path_factory.mktemp("pcd")
    for i, f in enumerate(parse_velodyne_pcap(CaptureStream(small_capture))):
        write_pcd(f, d / f"frame_{i:03d}.pcd")
    return d


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh, strict=True))


def drop_timing(rows):
    header = rows[0]
    keep = [i for i, h in enumerate(header) if h not in TIMING]
    return [[r[i] for i in keep] for r in rows]


def test_parse_codecs():
    specs = bench.parse_codecs("png-like,jls-like:cartesian-tri,octree:high,octree:0.02,video-inter", bit_depth=8)
    assert [s.label for s in specs] == [
        "png-like:spherical:8", "jls-like:cartesian-tri:8", "octree:high", "octree:0.02", "video-inter:spherical:8",
    ]
    assert specs[2].resolution == 0.001
    for bad in ("", "zip", "octree", "octree:huge", "png-like:diagonal"):
        with pytest.raises(bench.BenchError):
            bench.parse_codecs(bad)


def test_config_invariants(tmp_path):
    with pytest.raises(bench.BenchError):
        bench.BenchConfig([], [], tmp_path)
    with pytest.raises(bench.BenchError):
        bench.BenchConfig([], bench.parse_codecs("png-like"), tmp_path, repeat=0)


def test_run_writes_golden_headers_and_is_deterministic(small_capture, tmp_path):
    args = ["run", "--input", str(small_capture), "--codecs", "png-like,jls-like,octree:low,video-intra,video-inter",
            "--window", "2"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    headers = {
        "frames.csv": list(CSV_HEADER),
        "failures.csv": ["codec", "frame", "reason"],
        "aggregate.csv": ["codec", "frames", "rate", "bpp", "psnr_db", "enc_s", "dec_s", "rate_pcd"],
        "plot_rate.csv": ["codec", "rate"],
        "plot_time.csv": ["codec", "enc_s", "dec_s"],
        "plot_psnr_bpp.csv": ["codec", "bpp", "psnr_db"],
    }
    for name, header in headers.items():
        a, b = read_csv(tmp_path / "a" / name), read_csv(tmp_path / "b" / name)
        assert a[0] == header
        assert drop_timing(a) == drop_timing(b)
    frames = read_csv(tmp_path / "a" / "frames.csv")
    assert len(frames) == 1 + 5 * 3
    assert len(read_csv(tmp_path / "a" / "failures.csv")) == 1


def test_aggregate_is_the_mean_of_frame_rows(small_capture, tmp_path):
    frames, grid = bench.load_frames(bench.BenchConfig([small_capture], ["x"], tmp_path))
    result = bench.run_frames(frames, grid, bench.parse_codecs("jls-like,octree:med"))
    for agg in result.aggregates:
        rows = [r for r in result.rows if r.codec == agg.codec]
        assert agg.frames == len(rows) == 3
        assert agg.rate == pytest.approx(math.fsum(r.compression_rate for r in rows) / 3, rel=1e-12)
        assert agg.bpp == pytest.approx(math.fsum(r.bpp for r in rows) / 3, rel=1e-12)
        assert agg.psnr_db == pytest.approx(math.fsum(r.psnr_db for r in rows) / 3, rel=1e-12)
        assert agg.enc_s == pytest.approx(math.fsum(r.encode_seconds for r in rows) / 3, rel=1e-12)


def test_aggregate_uses_only_frames_every_codec_completed(small_capture, tmp_path):
    frames, grid = bench.load_frames(bench.BenchConfig([small_capture], ["x"], tmp_path))
    result = bench.run_frames(frames, grid, bench.parse_codecs("png-like"), psnr=False)
    # a second codec that only finished frame 0
    other = [dataclasses.replace(r, codec="other") for r in result.rows if r.frame == 0]
    aggs = bench.aggregate(result.rows + other, frames, ["png-like:spherical:16", "other"])
    assert [a.frames for a in aggs] == [1, 1]


def test_empty_input_gives_header_only(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert cli.main(["run", "--input", str(empty), "--format", "pcd", "--out", str(tmp_path / "o")]) == 0
    assert read_csv(tmp_path / "o" / "frames.csv") == [list(CSV_HEADER)]
    assert len(read_csv(tmp_path / "o" / "aggregate.csv")) == 1


def test_failed_rows_set_exit_code_1(small_capture, tmp_path):
    # a 1 nm leaf over a street scene needs far more than 21 octree levels
    code = cli.main(["run", "--input", str(small_capture), "--codecs", "png-like,octree:1e-9",
                     "--out", str(tmp_path)])
    assert code == 1
    failures = read_csv(tmp_path / "failures.csv")
    assert len(failures) == 1 + 3
    assert all(r[0] == "octree:1e-09" and "depth" in r[2] for r in failures[1:])
    assert len(read_csv(tmp_path / "frames.csv")) == 1 + 3


def test_usage_errors_exit_2(small_capture, tmp_path, capsys):
    assert cli.main(["run", "--input", str(tmp_path / "missing.pcap"), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["run", "--input", str(small_capture), "--codecs", "zip", "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.pcap"
    bad.write_bytes(b"\0" * 64)
    assert cli.main(["run", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--bit-depth", "12"])
    assert exc.value.code == 2
    assert "bench: error" in capsys.readouterr().err


def test_config_file_overrides_flags(small_capture, tmp_path):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(f"# matrix\ninput = {small_capture}\ncodecs = jls-like\nframes = 2\nout = {tmp_path / 'cfg_out'}\n")
    assert cli.main(["run", "--codecs", "png-like", "--out", str(tmp_path / "ignored"), "--config", str(cfg)]) == 0
    rows = read_csv(tmp_path / "cfg_out" / "frames.csv")
    assert [r[0] for r in rows[1:]] == ["jls-like:spherical:16"] * 2
    assert not (tmp_path / "ignored").exists()
    cfg.write_text("colour = blue\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2
    cfg.write_text("repeat = many\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2


def external_setup(pcd_frames, tmp_path, rate=0.75):
    originals = sorted(pcd_frames.glob("*.pcd"))
    decoded = tmp_path / "decoded"
    decoded.mkdir()
    sizes = tmp_path / "sizes.csv"
    lines = ["frame,comp_bytes,enc_s,dec_s"]
    for i, p in enumerate(originals):
        shutil.copy(p, decoded / f"out{i}.pcd")
        lines.append(f"{i},{p.stat().st_size * (1 - rate)!r},0.5,")
    sizes.write_text("\n".join(lines) + "\n")
    return originals, decoded, sizes


def test_external_import_row(pcd_frames, tmp_path):
    originals, decoded, sizes = external_setup(pcd_frames, tmp_path)
    args = ["import-external", "--sizes", str(sizes), "--decoded", str(decoded), "--input", str(pcd_frames),
            "--format", "pcd", "--name", "mycodec", "--out", str(tmp_path / "ext")]
    assert cli.main(args) == 0
    rows = read_csv(tmp_path / "ext" / "frames.csv")[1:]
    assert len(rows) == len(originals)
    for r in rows:
        assert r[0] == "external:mycodec"
        assert float(r[5]) == pytest.approx(0.75, abs=1e-12)
        assert r[7] == "inf"  # decoded == original
        assert r[8] == "0.5" and r[9] == ""
    agg = read_csv(tmp_path / "ext" / "plot_rate.csv")
    assert agg[1][0] == "external:mycodec" and float(agg[1][1]) == pytest.approx(0.75, abs=1e-12)


def test_external_import_missing_file_and_mismatch(pcd_frames, tmp_path):
    originals, decoded, sizes = external_setup(pcd_frames, tmp_path)
    (decoded / "out1.pcd").unlink()
    frames = [bench.load_frames(bench.BenchConfig([p], ["x"], tmp_path, fmt="pcd"))[0][0] for p in originals]
    for i, f in enumerate(frames):
        f.frame_id = i
    result = bench.import_external(sizes, decoded, frames, "codec")
    assert [(f.frame, f.reason) for f in result.failures] == [(1, "missing decoded file")]
    assert len(result.rows) == len(frames) - 1
    with pytest.raises(bench.BenchError, match="frames"):
        bench.import_external(sizes, decoded, frames[:1], "codec")
    args = ["import-external", "--sizes", str(sizes), "--decoded", str(decoded), "--input", str(originals[0]),
            "--format", "pcd", "--out", str(tmp_path / "ext")]
    assert cli.main(args) == 2


def test_synth_subcommand(tmp_path, capsys):
    out = tmp_path / "one.pcap"
    assert cli.main(["synth", "--out", str(out), "--frames", "1", "--rpm", "300"]) == 0
    assert f"wrote {out.stat().st_size} bytes" in capsys.readouterr().out
    frames = parse_velodyne_pcap(CaptureStream(out, rotation_rpm=300))
    assert len(frames) == 1 and isinstance(frames[0], PointCloud)
