"""Benchmark harness: runs a codec matrix over frames and writes metric tables.

Outputs in the run directory:

* ``frames.csv``: one MetricsReport row per (codec, frame)
* ``failures.csv``: codec, frame, reason for every row that could not be measured
* ``aggregate.csv``: per-codec means over the frames every codec completed
* ``plot_rate.csv``, ``plot_time.csv``, ``plot_psnr_bpp.csv``: plot-ready slices of the aggregate
"""

from __future__ import annotations

import csv
import logging
import math
import re
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .codecs import image, octree, video
from .codecs.container import CompressedBlob
from .ingest import CaptureStream, SensorModel, parse_velodyne_pcap, pcd_bytes, read_csv, read_pcd
from .metrics import CSV_HEADER, DEFAULT_K, MetricsReport, format_value, bpp, compression_rate, psnr_point_to_plane, timed
from .projection import GridLayout, Layout, project, unproject

log = logging.getLogger(__name__)

FAILURE_HEADER = ("codec", "frame", "reason")
AGGREGATE_HEADER = ("codec", "frames", "rate", "bpp", "psnr_db", "enc_s", "dec_s", "rate_pcd")
FORMATS = ("pcap", "pcd", "csv")


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class CodecSpec:
    kind: str  # png-like | jls-like | octree | video-inter | video-intra
    layout: Optional[Layout] = None
    bit_depth: int = 16
    resolution: Optional[float] = None
    profile: Optional[str] = None

    @property
    def label(self) -> str:
        if self.kind == "octree":
            return f"octree:{self.profile or self.resolution}"
        depth = 8 if self.kind.startswith("video") else self.bit_depth
        return f"{self.kind}:{self.layout.name.lower().replace('_', '-')}:{depth}"

    @property
    def is_video(self) -> bool:
        return self.kind.startswith("video")


def parse_codecs(text: str, layout="spherical", bit_depth: int = 16) -> list:
    """Parse ``png-like,jls-like,octree:high,video-inter:cartesian-tri`` style lists.

    Image and video codecs take an optional layout suffix; octree takes a
    profile name or a leaf size in metres.
    """
    default_layout = Layout.parse(layout)
    specs = []
    for token in filter(None, (t.strip() for t in text.split(","))):
        name, _, arg = token.partition(":")
        name = name.lower()
        if name == "octree":
            if not arg:
                raise BenchError("octree needs a profile, e.g. octree:high")
            try:
                res = float(arg)
                specs.append(CodecSpec("octree", resolution=res))
            except ValueError:
                try:
                    prof = octree.Profile.parse(arg)
                except KeyError:
                    raise BenchError(f"unknown octree profile {arg!r}") from None
                specs.append(CodecSpec("octree", resolution=octree.profile_resolution(prof), profile=prof.value))
        elif name in ("png-like", "jls-like", "video-inter", "video-intra"):
            try:
                lay = Layout.parse(arg) if arg else default_layout
            except KeyError:
                raise BenchError(f"unknown layout {arg!r}") from None
            specs.append(CodecSpec(name, lay, bit_depth))
        else:
            raise BenchError(f"unknown codec {name!r}")
    if not specs:
        raise BenchError("at least one codec is required")
    return specs


@dataclass
class BenchConfig:
    inputs: list
    codecs: list
    out: Path
    fmt: str = "pcap"
    repeat: int = 1
    k: int = DEFAULT_K
    window: int = 10  # frames per video sequence
    sensor: Optional[str] = None  # None: read from the capture
    rpm: int = 600
    octree_deflate: bool = False
    max_frames: Optional[int] = None

    def __post_init__(self):
        if not self.codecs:
            raise BenchError("at least one codec is required")
        if self.repeat < 1:
            raise BenchError("repeat must be >= 1")
        if self.window < 1:
            raise BenchError("window must be >= 1")
        if self.fmt not in FORMATS:
            raise BenchError(f"format must be one of {', '.join(FORMATS)}")
        self.out = Path(self.out)


def _expand(inputs, suffix: str) -> list:
    files = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files += sorted(q for q in p.iterdir() if q.suffix.lower() == suffix)
        else:
            files.append(p)
    return files


def load_frames(cfg: BenchConfig):
    """Read every input frame; returns (frames, grid)."""
    frames = []
    sensor = SensorModel.parse(cfg.sensor) if cfg.sensor else None
    if cfg.fmt == "pcap":
        for path in _expand(cfg.inputs, ".pcap"):
            frames += parse_velodyne_pcap(CaptureStream(path, sensor, cfg.rpm))
        if frames and sensor is None:
            sensor = SensorModel(frames[0].meta["sensor"])
    else:
        reader = read_pcd if cfg.fmt == "pcd" else read_csv
        frames = [reader(p) for p in _expand(cfg.inputs, "." + cfg.fmt)]
    if cfg.max_frames is not None:
        frames = frames[: cfg.max_frames]
    for i, f in enumerate(frames):
        f.frame_id = i
    return frames, GridLayout.from_sensor(sensor or SensorModel.VLP16, cfg.rpm)


def _measure(op, repeat: int):
    """One warm-up run, then the median wall time of ``repeat`` runs."""
    result, _ = timed(op)
    times = []
    for _ in range(repeat):
        result, t = timed(op)
        times.append(t)
    return result, statistics.median(times)


def _views(cloud, grid, spec):
    out = project(cloud, grid, spec.layout, spec.bit_depth)
    return out if isinstance(out, list) else [out]


def make_codec(spec: CodecSpec, grid: GridLayout, octree_deflate: bool = False):
    """Return (encode, decode): frames -> list of blobs, blobs -> reconstructed clouds."""
    if spec.kind in ("png-like", "jls-like"):
        enc = image.dictionary_encode if spec.kind == "png-like" else image.predictive_encode
        dec = image.dictionary_decode if spec.kind == "png-like" else image.predictive_decode

        def encode(frames):
            return [enc(v).to_bytes() for v in _views(frames[0], grid, spec)]

        def decode(blobs):
            return [unproject([dec(b) for b in blobs])]

    elif spec.kind == "octree":
        def encode(frames):
            return [octree.encode_cloud(frames[0], spec.resolution, octree_deflate)]

        def decode(blobs):
            return [octree.decode_cloud(blobs[0])]

    else:
        enc = video.interframe_encode if spec.kind == "video-inter" else video.intraframe_encode
        dec = video.interframe_decode if spec.kind == "video-inter" else video.intraframe_decode

        def encode(frames):
            per_frame = [_views(f, grid, spec) for f in frames]
            return [enc([views[v] for views in per_frame]).to_bytes() for v in range(len(per_frame[0]))]

        def decode(blobs):
            sequences = [dec(CompressedBlob.from_bytes(b)) for b in blobs]
            return [unproject([seq[i] for seq in sequences]) for i in range(len(sequences[0]))]

    return encode, decode


@dataclass
class Failure:
    codec: str
    frame: int
    reason: str


@dataclass
class AggregateRow:
    codec: str
    frames: int
    rate: float
    bpp: float
    psnr_db: Optional[float]
    enc_s: Optional[float]
    dec_s: Optional[float]
    rate_pcd: Optional[float]

    def row(self) -> list:
        return [format_value(v) for v in (self.codec, self.frames, self.rate, self.bpp, self.psnr_db, self.enc_s,
                                  self.dec_s, self.rate_pcd)]


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def aggregate(self, codec: str) -> AggregateRow:
        for a in self.aggregates:
            if a.codec == codec:
                return a
        raise KeyError(codec)


def _size(total: int, n: int):
    return total // n if total % n == 0 else total / n


def _report(label, frame, comp, k, enc_s, dec_s, rec) -> MetricsReport:
    psnr = psnr_point_to_plane(frame, rec, k) if rec is not None else None
    return MetricsReport(label, frame.frame_id, len(frame), frame.raw_size_bytes, comp,
                         compression_rate(comp, frame.raw_size_bytes), bpp(comp, len(frame)), psnr, enc_s, dec_s)


def _mean(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return math.fsum(values) / len(values) if values else None


def aggregate(rows, frames, labels) -> list:
    """Per-codec means over the frames that every codec in ``labels`` completed."""
    done = {}
    for r in rows:
        done.setdefault(r.codec, {})[r.frame] = r
    common = set(f.frame_id for f in frames)
    for label in labels:
        common &= set(done.get(label, {}))
    pcd_size = {f.frame_id: len(pcd_bytes(f)) for f in frames if f.frame_id in common}
    out = []
    for label in labels:
        sel = [done[label][i] for i in sorted(common)]
        if not sel:
            continue
        psnrs = [r.psnr_db for r in sel]
        psnr = None if any(p is None for p in psnrs) else (math.inf if any(math.isinf(p) for p in psnrs)
                                                           else math.fsum(psnrs) / len(psnrs))
        out.append(AggregateRow(
            label, len(sel),
            _mean(r.compression_rate for r in sel),
            _mean(r.bpp for r in sel),
            psnr,
            _mean(r.encode_seconds for r in sel),
            _mean(r.decode_seconds for r in sel),
            _mean(compression_rate(r.comp_bytes, pcd_size[r.frame]) for r in sel),
        ))
    return out


def run_frames(frames, grid, specs, repeat: int = 1, k: int = DEFAULT_K, window: int = 10,
               octree_deflate: bool = False, psnr: bool = True) -> BenchResult:
    """Measure every codec on every frame. Failures are recorded and the run continues."""
    result = BenchResult()
    for spec in specs:
        encode, decode = make_codec(spec, grid, octree_deflate)
        size = window if spec.is_video else 1
        groups = [frames[i: i + size] for i in range(0, len(frames), size)]
        for group in groups:
            try:
                blobs, enc_s = _measure(lambda: encode(group), repeat)
                clouds, dec_s = _measure(lambda: decode(blobs), repeat)
                if len(clouds) != len(group):
                    raise BenchError("decoder returned the wrong number of frames")
            except Exception as exc:  # recorded per row; the matrix keeps going
                log.warning("%s failed on frames %s: %s", spec.label, [f.frame_id for f in group], exc)
                result.failures += [Failure(spec.label, f.frame_id, f"{type(exc).__name__}: {exc}") for f in group]
                continue
            comp = _size(sum(len(b) for b in blobs), len(group))
            for frame, rec in zip(group, clouds):
                try:
                    result.rows.append(_report(spec.label, frame, comp, k, enc_s / len(group), dec_s / len(group),
                                               rec if psnr else None))
                except Exception as exc:
                    result.failures.append(Failure(spec.label, frame.frame_id, f"{type(exc).__name__}: {exc}"))
    result.aggregates = aggregate(result.rows, frames, [s.label for s in specs])
    return result


def write_outputs(result: BenchResult, out: Path) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    def dump(name, header, rows):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    dump("frames.csv", CSV_HEADER, [r.row() for r in result.rows])
    dump("failures.csv", FAILURE_HEADER, [[f.codec, f.frame, f.reason] for f in result.failures])
    dump("aggregate.csv", AGGREGATE_HEADER, [a.row() for a in result.aggregates])
    dump("plot_rate.csv", ("codec", "rate"), [[a.codec, format_value(a.rate)] for a in result.aggregates])
    dump("plot_time.csv", ("codec", "enc_s", "dec_s"), [[a.codec, format_value(a.enc_s), format_value(a.dec_s)] for a in result.aggregates])
    dump("plot_psnr_bpp.csv", ("codec", "bpp", "psnr_db"),
         [[a.codec, format_value(a.bpp), format_value(a.psnr_db)] for a in result.aggregates])


def run(cfg: BenchConfig) -> BenchResult:
    frames, grid = load_frames(cfg)
    result = run_frames(frames, grid, cfg.codecs, cfg.repeat, cfg.k, cfg.window, cfg.octree_deflate)
    write_outputs(result, cfg.out)
    return result


_TRAILING_INT = re.compile(r"(\d+)$")


def import_external(sizes_csv, decoded_dir, originals, codec_name: str = "external", k: int = DEFAULT_K) -> BenchResult:
    """Score an outside codec from its per-frame sizes and decoded PCD files.

    ``sizes_csv`` has columns ``frame,comp_bytes`` and optionally ``enc_s,dec_s``.
    Decoded files are matched to frames by the trailing number of their stem.
    """
    with open(sizes_csv, newline="") as fh:
        entries = list(csv.DictReader(fh))
    if len(entries) != len(originals):
        raise BenchError(f"sizes file lists {len(entries)} frames but the originals have {len(originals)}")
    decoded = {}
    for p in sorted(Path(decoded_dir).glob("*.pcd")):
        m = _TRAILING_INT.search(p.stem)
        if m:
            decoded[int(m.group(1))] = p
    label = f"external:{codec_name}"
    by_id = {f.frame_id: f for f in originals}
    result = BenchResult()
    for e in entries:
        try:
            fid = int(e["frame"])
            frame = by_id[fid]
        except (KeyError, ValueError):
            raise BenchError(f"sizes file names unknown frame {e.get('frame')!r}") from None
        path = decoded.get(fid)
        if path is None:
            result.failures.append(Failure(label, fid, "missing decoded file"))
            continue
        try:
            comp = float(e["comp_bytes"])
            comp = int(comp) if comp.is_integer() else comp
            enc = float(e["enc_s"]) if e.get("enc_s") else None
            dec = float(e["dec_s"]) if e.get("dec_s") else None
            result.rows.append(_report(label, frame, comp, k, enc, dec, read_pcd(path)))
        except Exception as exc:
            result.failures.append(Failure(label, fid, f"{type(exc).__name__}: {exc}"))
    result.aggregates = aggregate(result.rows, originals, [label])
    return result
