"""Command-line front end: map generation, undistortion, sweeps, estimates.

Exit codes: 0 success, 2 usage or validation error, 3 runtime evaluation
error (degenerate mapping, buffer underflow/overwrite, bad input files).
Every subcommand is deterministic: identical inputs give byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .evaluate import error_plane_bytes, export_heatmap, sweep
from .fixedpoint import QFormat, onthefly_field
from .model import (
    ConfigError,
    LensConfig,
    MappingError,
    RemapField,
    build_reference_map,
    displacement_bounds,
    load_config,
    read_fmap,
    write_fmap,
)
from .remap import (
    BufferOverwritten,
    BufferUnderflow,
    ReferenceMapProvider,
    read_delay,
    read_image,
    remap_image,
    required_lines,
    stream_remap,
    write_image,
)
from .resources import estimate_full_lut, estimate_onthefly, estimate_sampling
from .sampling import SubsampledMap, memory_footprint, read_smap, sampled_field, subsample, write_smap

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

APPROACHES = ("reference", "onthefly", "sampled", "full-lut")


class UsageError(Exception):
    pass


def _reject_irrelevant(args, approach: str):
    """Flags that do not apply to the selected approach are errors."""
    owners = {
        "frac_bits": ("onthefly",),
        "int_bits": ("onthefly",),
        "n": ("sampled",),
        "sample_frac_bits": ("sampled",),
        "sample_int_bits": ("sampled",),
    }
    for flag, valid in owners.items():
        if getattr(args, flag, None) is not None and approach not in valid:
            pretty = "--" + flag.replace("_", "-")
            raise UsageError(f"{pretty} does not apply to the {approach!r} approach")


def _qformat(args) -> QFormat:
    frac = args.frac_bits if args.frac_bits is not None else 16
    ibits = args.int_bits if args.int_bits is not None else 12
    return QFormat(frac, ibits)


def _build_field(cfg: LensConfig, approach: str, args) -> tuple[RemapField, SubsampledMap | None]:
    if approach in ("reference", "full-lut"):
        # the full-resolution LUT stores the reference map verbatim
        return build_reference_map(cfg), None
    if approach == "onthefly":
        return onthefly_field(cfg, _qformat(args)), None
    if approach == "sampled":
        reference = build_reference_map(cfg)
        smap = subsample(
            reference,
            args.n if args.n is not None else 6,
            args.sample_frac_bits if args.sample_frac_bits is not None else 8,
            args.sample_int_bits if args.sample_int_bits is not None else 13,
        )
        return sampled_field(smap), smap
    raise UsageError(f"unknown approach {approach!r}")


def _load_map_file(path) -> RemapField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"SMAP":
        return sampled_field(read_smap(path))
    if magic == b"FMAP":
        return read_fmap(path)
    raise ValueError(f"{path}: unrecognized map container")


def _cmd_gen_map(args) -> int:
    cfg = load_config(args.config).with_factor(args.factor)
    _reject_irrelevant(args, args.approach)
    field, smap = _build_field(cfg, args.approach, args)
    if args.approach == "sampled":
        write_smap(smap, args.out)
        print(f"wrote {args.out}: SMAP n={smap.n} grid {smap.grid_w}x{smap.grid_h} "
              f"({smap.grid_w * smap.grid_h} samples/axis, {memory_footprint(smap)} bits)")
    else:
        write_fmap(field, args.out)
        print(f"wrote {args.out}: FMAP {field.width}x{field.height} float64")
    return EXIT_OK


def _cmd_undistort(args) -> int:
    img = read_image(args.image)
    if args.map is not None:
        if args.config is not None or args.approach is not None:
            raise UsageError("--map and --config/--approach are mutually exclusive")
        field = _load_map_file(args.map)
    else:
        if args.config is None:
            raise UsageError("either --map or --config is required")
        approach = args.approach or "reference"
        cfg = load_config(args.config).with_factor(args.factor)
        _reject_irrelevant(args, approach)
        field, _ = _build_field(cfg, approach, args)
    if (field.width, field.height) != (img.width, img.height):
        raise UsageError(
            f"map is {field.width}x{field.height} but image is {img.width}x{img.height}"
        )
    provider = ReferenceMapProvider(field)
    if args.lines is not None and args.mode != "stream":
        raise UsageError("--lines applies only to --mode stream")
    if args.mode == "stream":
        bounds = displacement_bounds(field)
        lines = args.lines if args.lines is not None else required_lines(bounds)
        print(f"stream buffer: lines={lines} delay={read_delay(bounds)} "
              f"(required={required_lines(bounds)})")
        out = stream_remap(img, provider, lines=lines, border=args.border)
    else:
        out = remap_image(img, provider, border=args.border)
    write_image(out, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _parse_num_list(text: str, kind):
    try:
        return tuple(kind(tok) for tok in text.split(",") if tok != "")
    except ValueError as exc:
        raise UsageError(f"bad list {text!r}: {exc}") from exc


def _cmd_sweep(args) -> int:
    base = load_config(args.config)
    factors = _parse_num_list(args.factors, float)
    frac_bits = _parse_num_list(args.frac_bits, int)
    ns = _parse_num_list(args.n, int)
    if not factors:
        raise UsageError("--factors must not be empty")

    exports = []
    if args.heatmap_dir is not None:
        os.makedirs(args.heatmap_dir, exist_ok=True)
    if args.error_plane_dir is not None:
        os.makedirs(args.error_plane_dir, exist_ok=True)

    def on_report(approach, param, factor, report):
        stem = f"{approach}_p{param}_f{factor:g}"
        if args.heatmap_dir is not None:
            path = os.path.join(args.heatmap_dir, stem + ".pgm")
            write_image(export_heatmap(report, args.heatmap_scale), path)
            exports.append(path)
        if args.error_plane_dir is not None:
            path = os.path.join(args.error_plane_dir, stem + ".f32")
            with open(path, "wb") as fh:
                fh.write(error_plane_bytes(report))
            exports.append(path)

    result = sweep(
        base,
        factors,
        frac_bits=frac_bits,
        sampling_factors=ns,
        sample_frac_bits=args.sample_frac_bits,
        threads=args.threads,
        on_report=on_report if (args.heatmap_dir or args.error_plane_dir) else None,
    )
    result.write_csv(args.out)
    print(f"wrote {args.out}: {len(result.rows)} rows")
    for path in sorted(exports):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = load_config(args.config).with_factor(args.factor)
    reference = build_reference_map(cfg)
    smap = subsample(reference, args.n, args.sample_frac_bits, args.sample_int_bits)
    rows = [
        ("onthefly", estimate_onthefly(cfg)),
        (f"sampled(n={args.n})", estimate_sampling(smap.grid_w, smap.grid_h, smap.sample_fmt.total_bits)),
        ("full-lut", estimate_full_lut(cfg.image_width, cfg.image_height, args.lut_bits)),
    ]
    print(f"{'approach':<14} {'mul':>5} {'add':>5} {'div':>5} {'memory_bits':>12}")
    for name, est in rows:
        print(f"{name:<14} {est.multipliers:>5} {est.adders:>5} {est.dividers:>5} {est.memory_bits:>12}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    if args.map is not None:
        with open(args.map, "rb") as fh:
            magic = fh.read(4)
        if magic == b"SMAP":
            smap = read_smap(args.map)
            print(f"SMAP: n={smap.n} (pitch {1 << smap.n} px) grid {smap.grid_w}x{smap.grid_h} "
                  f"samples/axis={smap.grid_w * smap.grid_h}")
            print(f"sample format: {smap.sample_fmt.int_bits}+{smap.sample_fmt.frac_bits} bits "
                  f"({memory_footprint(smap)} bits total)")
            field = sampled_field(smap)
        else:
            field = read_fmap(args.map)
            print(f"FMAP: {field.width}x{field.height} float64")
    elif args.config is not None:
        cfg = load_config(args.config).with_factor(args.factor)
        field = build_reference_map(cfg)
        print(f"reference map: {field.width}x{field.height}")
    else:
        raise UsageError("either --map or --config is required")
    b = displacement_bounds(field)
    print(f"displacement x: [{b.min_dx:.6g}, {b.max_dx:.6g}] px")
    print(f"displacement y: [{b.min_dy:.6g}, {b.max_dy:.6g}] px")
    print(f"stream sizing: required_lines={required_lines(b)} read_delay={read_delay(b)}")
    return EXIT_OK


def _add_approach_params(p: argparse.ArgumentParser):
    p.add_argument("--frac-bits", type=int, default=None,
                   help="fixed-point fractional bits for onthefly (default 16)")
    p.add_argument("--int-bits", type=int, default=None,
                   help="fixed-point integer bits for onthefly (default 12)")
    p.add_argument("--n", type=int, default=None,
                   help="sampling factor: grid pitch 2^n px (default 6)")
    p.add_argument("--sample-frac-bits", type=int, default=None,
                   help="fractional bits of stored samples (default 8)")
    p.add_argument("--sample-int-bits", type=int, default=None,
                   help="integer bits of stored samples, sign included (default 13)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lensmap",
        description="Lens distortion correction maps: reference, fixed-point "
                    "on-the-fly, and subsampled-LUT approaches.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-map", help="compute a map and write it to a container file")
    p.add_argument("--config", required=True, help="lens configuration JSON")
    p.add_argument("--approach", required=True, choices=APPROACHES)
    p.add_argument("--factor", type=float, default=1.0, help="distortion factor (default 1)")
    p.add_argument("--out", required=True)
    _add_approach_params(p)
    p.set_defaults(func=_cmd_gen_map)

    p = sub.add_parser("undistort", help="remap an image through a correction map")
    p.add_argument("--image", required=True, help="input PGM/PPM")
    p.add_argument("--out", required=True, help="output PGM/PPM")
    p.add_argument("--map", default=None, help="FMAP or SMAP container")
    p.add_argument("--config", default=None, help="lens configuration JSON")
    p.add_argument("--approach", default=None, choices=APPROACHES)
    p.add_argument("--factor", type=float, default=1.0)
    p.add_argument("--mode", choices=("offline", "stream"), default="offline")
    p.add_argument("--lines", type=int, default=None,
                   help="stream line-buffer rows (default: auto from the map)")
    p.add_argument("--border", choices=("constant", "clamp"), default="constant")
    _add_approach_params(p)
    p.set_defaults(func=_cmd_undistort)

    p = sub.add_parser("sweep", help="evaluate approaches over a distortion-factor sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--factors", default="1,2,3,4,5")
    p.add_argument("--frac-bits", default="12,16,20")
    p.add_argument("--n", default="5,6,7")
    p.add_argument("--sample-frac-bits", type=int, default=8)
    p.add_argument("--heatmap-dir", default=None, help="write per-cell error heatmaps (PGM)")
    p.add_argument("--heatmap-scale", type=float, default=1.0,
                   help="error (px) mapped to full intensity (default 1)")
    p.add_argument("--error-plane-dir", default=None,
                   help="write per-cell error planes (flat float32)")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("estimate", help="print hardware operator estimates")
    p.add_argument("--config", required=True)
    p.add_argument("--factor", type=float, default=1.0)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--sample-frac-bits", type=int, default=8)
    p.add_argument("--sample-int-bits", type=int, default=13)
    p.add_argument("--lut-bits", type=int, default=32,
                   help="bits per value for the full-resolution LUT row")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("inspect", help="print map statistics and displacement bounds")
    p.add_argument("--map", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--factor", type=float, default=1.0)
    p.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MappingError, BufferUnderflow, BufferOverwritten, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
