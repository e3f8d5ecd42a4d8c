"""Command-line interface: ``focrlb <subcommand> --config cfg.json --out out.csv``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ConfigError, SweepSpec, default_grid, load_config, parse_config
from .report import (
    MC_COLUMNS,
    PSD_COLUMNS,
    SWEEP_COLUMNS,
    format_csv,
    mc_rows,
    run_montecarlo,
    run_psd,
    run_sweep,
)

log = logging.getLogger("focrlb")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

SWEEP_COMMANDS = {
    "sweep-frequency": "frequency",
    "sweep-amplitude": "amplitude",
    "sweep-length": "length",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="focrlb",
        description="Cramer-Rao bounds for forced-oscillation amplitude, frequency and phase.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config (defaults: paper settings)")
    common.add_argument("--out", type=Path, help="output CSV path (default: stdout)")
    common.add_argument("--jobs", type=int, default=1, help="max worker threads")
    common.add_argument(
        "--reproducible", action="store_true", help="omit the timestamp comment line"
    )
    common.add_argument("-v", "--verbose", action="store_true")

    for name, kind in SWEEP_COMMANDS.items():
        sub.add_parser(name, parents=[common], help=f"STD bounds versus FO {kind}")
    p = sub.add_parser("psd", parents=[common], help="ambient-noise PSD on [0, Fs/2]")
    p.add_argument("--grid-size", type=int, help="number of frequency points")
    m = sub.add_parser("montecarlo", parents=[common], help="validate bounds by simulation")
    m.add_argument("--runs", type=int, help="override mc.runs")
    m.add_argument("--seed", type=int, help="override mc.seed")
    return parser


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = parse_config(args.config) if args.config else load_config({})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    comment = None
    if not args.reproducible:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        comment = f"focrlb {__version__} {args.command} generated {stamp}"

    if args.command in SWEEP_COMMANDS:
        kind = SWEEP_COMMANDS[args.command]
        spec = cfg.sweep
        if spec is None:
            spec = SweepSpec(kind, default_grid(kind, cfg.fs_hz))
        elif spec.kind != kind:
            print(f"error: sweep.kind is {spec.kind!r} but command is {args.command}", file=sys.stderr)
            return EXIT_INVALID
        log.info("%s sweep over %d points", kind, len(spec.grid))
        rows = run_sweep(cfg, spec, jobs=args.jobs)
        _emit(format_csv(SWEEP_COLUMNS, rows, comment), args.out)
        failed = [r for r in rows if r[-1]]
        for r in failed:
            log.warning("point %s failed: %s", r[0], r[-1])
        return EXIT_NUMERICAL if len(failed) == len(rows) else EXIT_OK

    if args.command == "psd":
        size = args.grid_size or cfg.psd_grid_size
        if size < 2:
            print("error: --grid-size must be >= 2", file=sys.stderr)
            return EXIT_INVALID
        _emit(format_csv(PSD_COLUMNS, run_psd(cfg.filter, size), comment), args.out)
        return EXIT_OK

    overrides = {k: v for k, v in (("runs", args.runs), ("seed", args.seed)) if v is not None}
    if overrides.get("runs", 1) < 1 or not 0 <= overrides.get("seed", 0) < 2**64:
        print("error: --runs must be >= 1 and --seed a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_INVALID
    if overrides:
        cfg = replace(cfg, mc=replace(cfg.mc, **overrides))
    try:
        res = run_montecarlo(cfg, jobs=args.jobs)
    except (ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _emit(format_csv(MC_COLUMNS, mc_rows(res, cfg.fs_hz), comment), args.out)
    if res.failed_runs == res.runs:
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
