"""Command-line entry point.

Exit status: 0 on success, 1 for usage or configuration errors, 2 for
runtime failures (I/O, sampling).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .analysis import expected_beat_period, fit_envelope_cos2, fit_product_cos2
from .classical import ImageGrid, render_superposition
from .config import PRESET_NAMES, ConfigError, RenderSpec, load_config, resolve_preset
from .engine import effective_g1
from .harness import run_preset
from .io import read_csv, write_pgm

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve(target: str):
    if target in PRESET_NAMES:
        return resolve_preset(target)
    path = Path(target)
    if not path.is_file():
        raise UsageError(f"{target!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a config file")
    return load_config(path)


def cmd_run(args) -> int:
    preset = _resolve(args.target)
    mode = "mc" if args.mode in ("mc", "montecarlo") else "analytic"
    bundle = run_preset(preset, mode, args.out, workers=args.workers)
    for p in (*bundle.data_paths, *bundle.image_paths, bundle.report_path):
        print(p)
    return EXIT_OK


def cmd_fit(args) -> int:
    record = read_csv(args.csv)
    if args.model == "product":
        periods = (args.p1, args.p2) if args.p1 and args.p2 else None
        fit = fit_product_cos2(record, periods)
    else:
        fit = fit_envelope_cos2(record, args.period, fast_period=args.fast_period)
    print(json.dumps(fit.to_dict(), indent=2, default=str))
    return EXIT_OK


def cmd_render(args) -> int:
    preset = _resolve(args.target)
    spec = preset.render
    if spec is None:
        t1, _ = effective_g1(preset.config)
        spec = RenderSpec(t1, preset.config.grating_2)
    grid = ImageGrid(args.width, args.height, args.pitch) if args.pitch else spec.grid2d
    image = render_superposition(spec.grating_1, spec.grating_2, spec.relative_angle, grid)
    print(write_pgm(image, args.out))
    return EXIT_OK


def cmd_beat(args) -> int:
    try:
        period = expected_beat_period(args.p1, args.p2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print("inf" if math.isinf(period) else f"{period:.12g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmoire", description="Moiré fringes in two-photon coincidence images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate a preset or config file and fit it")
    run.add_argument("target", help=f"preset ({', '.join(PRESET_NAMES)}) or config file")
    run.add_argument("--mode", choices=("analytic", "mc", "montecarlo"), default="analytic")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=cmd_run)

    fit = sub.add_parser("fit", help="fit a scan CSV")
    fit.add_argument("csv")
    fit.add_argument("--model", choices=("product", "envelope"), required=True)
    fit.add_argument("--p1", type=float, help="initial first period (product)")
    fit.add_argument("--p2", type=float, help="initial second period (product)")
    fit.add_argument("--period", type=float, help="initial envelope period")
    fit.add_argument("--fast-period", type=float, help="window for envelope decimation")
    fit.set_defaults(func=cmd_fit)

    render = sub.add_parser("render", help="write the classical superposition as PGM")
    render.add_argument("target")
    render.add_argument("--out", required=True)
    render.add_argument("--width", type=int, default=1200)
    render.add_argument("--height", type=int, default=200)
    render.add_argument("--pitch", type=float, help="pixel pitch in mm (default: preset grid)")
    render.set_defaults(func=cmd_render)

    beat = sub.add_parser("beat", help="expected moiré beat period of two gratings")
    beat.add_argument("p1", type=float)
    beat.add_argument("p2", type=float)
    beat.set_defaults(func=cmd_beat)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"qmoire: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"qmoire: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
