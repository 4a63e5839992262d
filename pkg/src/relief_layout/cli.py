"""``relief-layout`` command line.

Exit codes: 0 success, 2 schema/config error, 3 only infeasible layouts
found, 4 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .bundle import load_bundle
from .config import load_config
from .errors import IoError, ReliefLayoutError
from .pipeline import EXIT_INPUT, EXIT_INTERNAL, EXIT_OK, RunReport, run_pipeline

logger = logging.getLogger("relief_layout")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", type=Path, help="TOML or JSON pipeline config", **d)
    parser.add_argument("--seed", type=int, help="seed for every stochastic stage", **d)
    parser.add_argument("--out", type=Path, help="output directory", **d)
    parser.add_argument("--quiet", action="store_true", help="only print errors", **d)


def _evolution_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--population", type=int, dest="population_size")
    p.add_argument("--generations", type=int)
    p.add_argument("--format", dest="formats", choices=("json", "csv"), action="append",
                   help="archive export format (repeatable; default both)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relief-layout",
                                     description="Pre-position emergency materials across joint suppliers.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and check a bundle")
    p.add_argument("bundle", type=Path)

    p = sub.add_parser("couple", help="coupling degree of co-occurring disasters")
    p.add_argument("--bundle", type=Path)
    p.add_argument("--judgment", type=Path)
    p.add_argument("--series", type=Path)
    p.add_argument("--active", nargs="+", help="disaster subsystems to couple (default: all)")
    p.add_argument("--risk-index", type=float)

    p = sub.add_parser("forecast", help="forecast area demands from historical records")
    p.add_argument("bundle", type=Path, nargs="?")
    p.add_argument("--training", type=Path)
    p.add_argument("--rounds", type=int)

    p = sub.add_parser("classify", help="fuzzy substitutability groups of the material catalog")
    p.add_argument("--bundle", type=Path)
    p.add_argument("--catalog", type=Path)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("optimize", help="evolve the Pareto archive of supplier layouts")
    p.add_argument("bundle", type=Path, nargs="?")
    p.add_argument("--demand-file", type=Path)
    _evolution_flags(p)

    p = sub.add_parser("run", help="full pipeline: couple, forecast, classify, optimize")
    p.add_argument("bundle", type=Path, nargs="?")
    p.add_argument("--skip-coupling", action="store_true", default=None)
    p.add_argument("--skip-forecast", action="store_true", default=None)
    p.add_argument("--skip-classify", action="store_true", default=None)
    p.add_argument("--demand-file", type=Path)
    _evolution_flags(p)

    for p in sub.choices.values():
        _global_flags(p, suppress=True)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    g = lambda name: getattr(args, name, None)     # noqa: E731
    o = {"seed": g("seed"), "out": g("out"), "inputs.bundle": g("bundle"),
         "inputs.judgment": g("judgment"), "inputs.series": g("series"), "inputs.training": g("training"),
         "inputs.catalog": g("catalog"), "inputs.demand_file": g("demand_file"),
         "stages.skip_coupling": g("skip_coupling"), "stages.skip_forecast": g("skip_forecast"),
         "stages.skip_classify": g("skip_classify"),
         "coupling.active": g("active"), "coupling.risk_index": g("risk_index"),
         "forecast.rounds": g("rounds"), "classify.threshold": g("threshold"),
         "evolution.population_size": g("population_size"), "evolution.generations": g("generations"),
         "export.formats": g("formats")}
    if g("demand_file") is not None:
        o["stages.skip_forecast"] = True
    return o


STAGES_FOR = {
    "couple": ("couple",),
    "forecast": ("forecast",),
    "classify": ("classify",),
    "optimize": ("optimize",),
    "run": ("load", "couple", "forecast", "classify", "optimize"),
}
REQUIRED = {"couple": ("judgment", "series"), "forecast": ("training",), "classify": ("catalog",)}


def _print(report: RunReport, quiet: bool) -> None:
    if quiet:
        return
    for s in report.stages:
        line = f"{s.name:<9} {s.status:<8} {s.seconds:7.2f}s"
        print(line + (f"  {s.note}" if s.note else ""))
    if report.archive is not None:
        a = report.archive
        print(f"archive: {a['size']} solutions" + (" (infeasible)" if a["infeasible"] else ""))
    for w in report.warnings:
        print(f"warning: {w}")
    print(f"report: {Path(report.config['out']) / 'report.json'}")


def _validate(args, quiet: bool) -> int:
    loaded = load_bundle(args.bundle)
    inst = loaded.instance
    if not quiet:
        J, F, I = inst.shape
        print(f"{args.bundle}: {J} suppliers, {F} areas, {I} materials, "
              f"{inst.n_decision_variables} variables, {inst.n_constraints} constraints")
        print(f"digest {loaded.digest}")
        for w in loaded.warnings:
            print(f"warning: {w}")
        print(f"{len(loaded.warnings)} warnings")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    quiet = bool(getattr(args, "quiet", False))
    logging.basicConfig(level=logging.ERROR if quiet else logging.INFO, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    try:
        if args.command == "validate":
            return _validate(args, quiet)
        cfg = load_config(getattr(args, "config", None), _overrides(args))
        for name in REQUIRED.get(args.command, ()):
            if cfg.companion(name) is None:
                print(f"error: {args.command} needs --{name} (or a bundle holding one)", file=sys.stderr)
                return EXIT_INPUT
        report = run_pipeline(cfg, STAGES_FOR[args.command])
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ReliefLayoutError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:        # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    _print(report, quiet)
    if report.failed_stage and not quiet:
        print(f"error in stage {report.failed_stage}: {report.error}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
