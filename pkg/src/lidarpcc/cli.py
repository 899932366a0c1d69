"""``bench`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench
from .ingest import PCDError, PcapError
from .synth import SynthConfig, write_synthetic_capture

# config-file keys and how to convert their values
_CONFIG_KEYS = {
    "input": lambda v: v.split(),
    "format": str,
    "codecs": str,
    "bit_depth": int,
    "layout": str,
    "out": str,
    "repeat": int,
    "k": int,
    "window": int,
    "sensor": str,
    "rpm": int,
    "octree_deflate": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
    "frames": int,
}


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _CONFIG_KEYS:
            raise bench.BenchError(f"{path}:{lineno}: expected one of {', '.join(_CONFIG_KEYS)} as key=value")
        try:
            values[key] = _CONFIG_KEYS[key](value.strip())
        except ValueError:
            raise bench.BenchError(f"{path}:{lineno}: bad value for {key}: {value.strip()!r}") from None
    return values


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description="LiDAR point cloud compression benchmark")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a codec matrix over a dataset")
    r.add_argument("--input", nargs="+", help="capture file(s) or directories of frame files")
    r.add_argument("--format", choices=bench.FORMATS, default="pcap")
    r.add_argument("--codecs", default="png-like,jls-like,octree:low,octree:med,octree:high,video-inter,video-intra")
    r.add_argument("--bit-depth", type=int, choices=(8, 16), default=16)
    r.add_argument("--layout", choices=("spherical", "spherical-radius", "cartesian-tri", "cartesian-single"),
                   default="spherical")
    r.add_argument("--out", default="bench_out")
    r.add_argument("--repeat", type=int, default=1, help="timed runs per measurement, after one warm-up")
    r.add_argument("--k", type=int, default=8, help="neighbours for normal estimation")
    r.add_argument("--window", type=int, default=10, help="frames per video sequence")
    r.add_argument("--sensor", choices=("VLP16", "HDL32"), help="override the sensor detected in the capture")
    r.add_argument("--rpm", type=int, default=600)
    r.add_argument("--octree-deflate", action="store_true", help="deflate the octree occupancy stream")
    r.add_argument("--frames", type=int, help="use only the first N frames")
    r.add_argument("--config", help="key=value file whose entries override the flags")

    e = sub.add_parser("import-external", help="score an outside codec from sizes and decoded frames")
    e.add_argument("--sizes", required=True, help="CSV with frame,comp_bytes[,enc_s,dec_s]")
    e.add_argument("--decoded", required=True, help="directory of decoded PCD files, one per frame")
    e.add_argument("--input", nargs="+", required=True, help="the original frames")
    e.add_argument("--format", choices=bench.FORMATS, default="pcap")
    e.add_argument("--name", default="external", help="codec name for the report")
    e.add_argument("--out", default="bench_external")
    e.add_argument("--k", type=int, default=8)
    e.add_argument("--sensor", choices=("VLP16", "HDL32"))
    e.add_argument("--rpm", type=int, default=600)

    s = sub.add_parser("synth", help="write a synthetic VLP-16 capture of a street scene")
    s.add_argument("--out", required=True)
    s.add_argument("--frames", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noise", type=float, default=0.01, help="range noise std dev in metres")
    s.add_argument("--rpm", type=int, default=600)
    return p


def _run(args) -> int:
    opts = {
        "input": args.input, "format": args.format, "codecs": args.codecs, "bit_depth": args.bit_depth,
        "layout": args.layout, "out": args.out, "repeat": args.repeat, "k": args.k, "window": args.window,
        "sensor": args.sensor, "rpm": args.rpm, "octree_deflate": args.octree_deflate, "frames": args.frames,
    }
    if args.config:
        opts.update(read_config(args.config))
    if not opts["input"]:
        raise bench.BenchError("no input given (--input or input= in the config file)")
    cfg = bench.BenchConfig(
        inputs=opts["input"],
        codecs=bench.parse_codecs(opts["codecs"], opts["layout"], opts["bit_depth"]),
        out=opts["out"], fmt=opts["format"], repeat=opts["repeat"], k=opts["k"], window=opts["window"],
        sensor=opts["sensor"], rpm=opts["rpm"], octree_deflate=opts["octree_deflate"], max_frames=opts["frames"],
    )
    result = bench.run(cfg)
    for a in result.aggregates:
        print(f"{a.codec:32s} frames={a.frames:3d} rate={a.rate:.4f} bpp={a.bpp:.4f} psnr={a.psnr_db} dB")
    if result.failures:
        print(f"{len(result.failures)} failed rows, see {cfg.out / 'failures.csv'}", file=sys.stderr)
        return 1
    return 0


def _import(args) -> int:
    cfg = bench.BenchConfig(inputs=args.input, codecs=["external"], out=args.out, fmt=args.format,
                            sensor=args.sensor, rpm=args.rpm, k=args.k)
    originals, _ = bench.load_frames(cfg)
    result = bench.import_external(args.sizes, args.decoded, originals, args.name, args.k)
    bench.write_outputs(result, cfg.out)
    if result.failures:
        print(f"{len(result.failures)} failed rows, see {cfg.out / 'failures.csv'}", file=sys.stderr)
        return 1
    return 0


def _synth(args) -> int:
    n = write_synthetic_capture(args.out, SynthConfig(frames=args.frames, seed=args.seed, noise_m=args.noise,
                                                      rpm=args.rpm))
    print(f"wrote {n} bytes to {args.out}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": _run, "import-external": _import, "synth": _synth}[args.command]
    try:
        return handler(args)
    except (bench.BenchError, PcapError, PCDError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
