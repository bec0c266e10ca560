"""Command-line interface: ``itcircles {detect,synth,eval-sampling,bench}``.

Exit status is 0 on success, 2 when a file cannot be read or written and 3
when parameters or a scene description are invalid.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .detector import STAGES, DetectorConfig, detect_with_stats, flat_field_types
from .errors import InvalidParameterError, InvalidSpecError
from .evaluation import SIGMA_ACC, SWEEP_ITERATIONS, Strategy, add_gaussian_noise, psnr_sweep
from .imageio import read_image, write_accumulator, write_image
from .report import DetectionReport, fmt_real, parse_report
from .scenes import CircleShape, SceneSpec, distractor_scene_spec, single_circle_spec, synth_scene

EXIT_OK = 0
EXIT_IO = 2
EXIT_PARAM = 3

SWEEP_COLUMNS = ("strategy", "radius", "variance", "trials", "mean_psnr_db", "delta_psnr_db")
BENCH_COLUMNS = ("image", "reps", "mean_ms", "min_ms", "max_ms") + tuple(f"{s}_pct" for s in STAGES)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with the I/O code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def _number_list(text: str, kind=float) -> list:
    """``"10,20,30"`` or the inclusive range ``"10:100:10"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            try:
                start, stop, step = (float(v) for v in part.split(":"))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad range {part!r}; expected start:stop:step")
            if step <= 0 or stop < start:
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(kind(round(start + i * step, 10)) for i in range(n))
        else:
            try:
                out.append(kind(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _optional_float(text: str):
    return None if text.lower() == "none" else float(text)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector configuration (defaults in parentheses)")
    defaults = DetectorConfig().flat()
    for name, type_name in flat_field_types().items():
        flag = "--" + name.replace("_", "-")
        type_name = str(type_name)
        if name == "sampler":
            g.add_argument(flag, dest=name, default=None, choices=("its", "four-point", "three-point"),
                           help=f"sampling strategy ({defaults[name]})")
        elif "None" in type_name:
            g.add_argument(flag, dest=name, default=None, type=_optional_float,
                           help=f"number or 'none' ({defaults[name]})")
        else:
            conv = int if type_name == "int" else float
            g.add_argument(flag, dest=name, default=None, type=conv, help=f"({defaults[name]})")
    g.add_argument("--seed", dest="rng_seed", type=int, default=None, help="alias of --rng-seed")
    g.add_argument("--config", dest="config_from", metavar="REPORT",
                   help="start from the configuration echoed in an earlier report")


def _config_from_args(args) -> DetectorConfig:
    base = DetectorConfig().flat()
    if args.config_from:
        with open(args.config_from, encoding="utf-8") as fh:
            base = parse_report(fh.read())["config"].flat()
    for name in base:
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    return DetectorConfig.from_flat(base)


# --------------------------------------------------------------------------
# detect


def cmd_detect(args) -> int:
    cfg = _config_from_args(args)
    img = read_image(args.input)
    t0 = time.perf_counter()
    detections, stats = detect_with_stats(img, cfg)
    wall = (time.perf_counter() - t0) * 1000.0
    report = DetectionReport(args.input, img.shape[1], img.shape[0], cfg, detections, stats, wall)
    text = report.to_text(include_timing=not args.omit_timing)
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.overlay:
        from .plotting import render_overlay

        render_overlay(img, detections, args.overlay)
    return EXIT_OK


# --------------------------------------------------------------------------
# synth


def _two_circle_spec() -> SceneSpec:
    return SceneSpec(256, 256, (CircleShape((80.0, 80.0), 30.0), CircleShape((180.0, 180.0), 40.0)))


PRESETS = {
    "distractor": distractor_scene_spec,
    "single-circle": lambda: single_circle_spec(50.0),
    "two-circles": _two_circle_spec,
}


def _truth_path(image_path: str) -> str:
    return os.path.splitext(image_path)[0] + ".truth.json"


def cmd_synth(args) -> int:
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidSpecError(f"{args.spec}: not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise InvalidSpecError(f"{args.spec}: expected a JSON object")
        spec = SceneSpec.from_dict(data)
    else:
        spec = PRESETS[args.preset]()
    img, truth = synth_scene(spec)
    img = add_gaussian_noise(img, args.noise_variance, args.seed)
    write_image(args.output, img)
    sidecar = {
        "image": os.path.basename(args.output),
        "width": spec.width,
        "height": spec.height,
        "noise_variance": args.noise_variance,
        "seed": args.seed,
        "circles": [{"a": c.a, "b": c.b, "r": c.r} for c in truth],
        "spec": spec.to_dict(),
    }
    with open(_truth_path(args.output), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# eval-sampling


def _csv_real(x) -> str:
    if x is None:
        return ""
    return fmt_real(float(x))


def write_sweep_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow(
            (r.strategy, f"{r.radius:g}", f"{r.variance:g}", r.trials, _csv_real(r.psnr), _csv_real(r.delta_psnr))
        )


def cmd_eval_sampling(args) -> int:
    if args.trials < 1:
        raise InvalidParameterError("--trials must be >= 1")
    if args.iterations < 1:
        raise InvalidParameterError("--iterations must be >= 1")
    strategies = [Strategy.parse(s) for s in args.strategies.split(",") if s.strip()]
    grids: dict | None = {} if args.grids_dir else None
    rows = psnr_sweep(
        args.radii,
        args.variances,
        strategies,
        args.trials,
        seed=args.seed,
        size=args.size,
        iterations=args.iterations,
        smooth_sigma=args.smooth_sigma,
        keep_grids=grids,
    )
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_sweep_csv(rows, fh)
    else:
        write_sweep_csv(rows, sys.stdout)
    figure = args.figure
    if figure is None and args.output and args.output != "-":
        figure = os.path.splitext(args.output)[0] + ".png"
    if figure and figure != "none":
        from .plotting import plot_psnr_sweep

        plot_psnr_sweep(rows, figure)
    if grids:
        os.makedirs(args.grids_dir, exist_ok=True)
        for (name, radius, variance), votes in grids.items():
            fname = f"acc_{name.replace(':', '-')}_r{radius:g}_v{variance:g}.pgm"
            write_accumulator(os.path.join(args.grids_dir, fname), votes)
    return EXIT_OK


# --------------------------------------------------------------------------
# bench


def bench_image(img, cfg: DetectorConfig, reps: int) -> dict:
    """Time ``reps`` detections; returns wall-time stats and stage percentages."""
    walls = []
    stage_sum = dict.fromkeys(STAGES, 0.0)
    for _ in range(reps):
        t0 = time.perf_counter()
        _, stats = detect_with_stats(img, cfg)
        walls.append((time.perf_counter() - t0) * 1000.0)
        for s in STAGES:
            stage_sum[s] += stats.timings[s]
    total = sum(stage_sum.values())
    if total > 0:
        pct = {s: 100.0 * v / total for s, v in stage_sum.items()}
    else:
        pct = dict.fromkeys(STAGES, 100.0 / len(STAGES))
    return {
        "mean_ms": float(np.mean(walls)),
        "min_ms": float(np.min(walls)),
        "max_ms": float(np.max(walls)),
        "stages": pct,
    }


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise InvalidParameterError("--reps must be >= 1")
    cfg = _config_from_args(args)
    images = [(path, read_image(path)) for path in args.input]
    results = []
    for path, img in images:
        results.append((path, bench_image(img, cfg, args.reps)))
    out = open(args.output, "w", encoding="utf-8", newline="") if args.output and args.output != "-" else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(BENCH_COLUMNS)
        for path, res in results:
            w.writerow(
                [path, args.reps, fmt_real(res["mean_ms"]), fmt_real(res["min_ms"]), fmt_real(res["max_ms"])]
                + [fmt_real(res["stages"][s]) for s in STAGES]
            )
    finally:
        if out is not sys.stdout:
            out.close()
    figure = args.figure
    if figure is None and args.output and args.output != "-":
        figure = os.path.splitext(args.output)[0] + ".png"
    if figure and figure != "none":
        from .plotting import plot_stage_breakdown

        plot_stage_breakdown([os.path.basename(p) for p, _ in results], [r["stages"] for _, r in results], figure)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="itcircles", description="Randomized circle detection from isosceles-triangle sampling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="detect circles in a PGM or PNG image")
    p.add_argument("--input", "-i", required=True, help="input image (.pgm or .png)")
    p.add_argument("--output", "-o", help="report path (default: stdout)")
    p.add_argument("--overlay", help="write a PNG with detections drawn over the image")
    p.add_argument("--omit-timing", action="store_true",
                   help="leave wall-clock fields out so reruns give identical reports")
    _add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="render a synthetic scene with optional Gaussian noise")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--spec", help="scene description (JSON)")
    src.add_argument("--preset", choices=sorted(PRESETS), default="distractor", help="built-in scene (distractor)")
    p.add_argument("--output", "-o", required=True, help="output image (.pgm or .png); truth goes to *.truth.json")
    p.add_argument("--noise-variance", type=float, default=0.0, help="variance of additive noise (0)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (0)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval-sampling", help="accumulator PSNR sweep over radius and noise variance")
    p.add_argument("--radii", type=_number_list, default=[50.0], help="e.g. 50 or 10:100:10 (50)")
    p.add_argument("--variances", type=_number_list, default=[0.005, 0.01, 0.03, 0.05, 0.1, 0.2],
                   help="noise variances, same syntax as --radii")
    p.add_argument("--strategies", default="its:0.05,four-point,three-point",
                   help="comma list of three-point, four-point, its[:delta_k]")
    p.add_argument("--trials", type=int, default=20, help="trials per cell (20)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=SWEEP_ITERATIONS, help=f"samples per trial ({SWEEP_ITERATIONS})")
    p.add_argument("--smooth-sigma", type=float, default=SIGMA_ACC, help=f"accumulator smoothing ({SIGMA_ACC})")
    p.add_argument("--size", type=int, default=256, help="square image size (256)")
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")
    p.add_argument("--figure", help="PSNR plot path, or 'none' (default: CSV name with .png)")
    p.add_argument("--grids-dir", help="also write averaged accumulators as PGM files here")
    p.set_defaults(func=cmd_eval_sampling)

    p = sub.add_parser("bench", help="time detection and break it down by stage")
    p.add_argument("--input", "-i", nargs="+", required=True, help="one or more images")
    p.add_argument("--reps", type=int, default=10, help="repetitions per image (10)")
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")
    p.add_argument("--figure", help="stage breakdown plot, or 'none' (default: CSV name with .png)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParameterError, InvalidSpecError) as exc:
        print(f"itcircles: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"itcircles: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"itcircles: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
