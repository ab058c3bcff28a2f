"""Command-line interface: run, sweep, theory, compare, validate."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import typing
from typing import Any, Sequence

from . import analytics, harness
from .config import ConfigError, ScenarioConfig, config_from_mapping, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STRICT = 3


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("none", "auto", "") else int(text)


def _converter(f: dataclasses.Field) -> Any:
    hints = typing.get_type_hints(ScenarioConfig)
    kind = hints[f.name]
    if kind is bool:
        return _parse_bool
    if kind is int:
        return int
    if kind is float:
        return float
    if kind is str:
        return str
    if f.name == "algorithms":
        return _parse_list
    if f.name == "warmup":
        return _optional_int
    raise TypeError(f"no CLI converter for {f.name}")  # pragma: no cover


def add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat YAML or JSON scenario file")
    g = p.add_argument_group("scenario overrides")
    for f in dataclasses.fields(ScenarioConfig):
        flag = "--" + f.name.replace("_", "-")
        g.add_argument(flag, dest=f"cfg_{f.name}", type=_converter(f), default=None, metavar=f.name.upper())


def build_config(args: argparse.Namespace) -> ScenarioConfig:
    base = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {
        k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None
    }
    return config_from_mapping(overrides, base)


def _common(p: argparse.ArgumentParser) -> None:
    add_config_flags(p)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--strict", action="store_true", help="nonzero exit on non-convergence or analytic clamping")
    p.add_argument("--workers", type=int, default=1, help="parallel replication processes")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isac-nd", description=__doc__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    _common(p)
    p.add_argument("--summary", help="also write the summary CSV here")
    p.add_argument("--event-log", help="append per-slot JSONL events here")

    p = sub.add_parser("sweep", help="simulate along one parameter axis")
    _common(p)
    p.add_argument("--axis", required=True, choices=sorted(harness.SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated axis values")

    p = sub.add_parser("theory", help="analytic N(t) curve")
    _common(p)

    p = sub.add_parser("compare", help="several algorithms on the same seeds")
    _common(p)
    p.add_argument("--summary", help="also write the summary CSV here")

    p = sub.add_parser("validate", help="theory-vs-simulation deviation report")
    _common(p)
    p.add_argument("--tolerance", type=float, default=0.15, help="allowed MAD as a fraction of N-1")
    return ap


def _axis_values(axis: str, text: str) -> list[Any]:
    key = harness.SWEEP_AXES[axis]
    conv = int if key == "n_nodes" else float
    return [conv(v) for v in _parse_list(text)]


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = build_config(args)
        return _dispatch(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except analytics.BoundsError as exc:
        print(f"strict mode: {exc}", file=sys.stderr)
        return EXIT_STRICT


def _dispatch(args: argparse.Namespace, cfg: ScenarioConfig) -> int:
    strict_fail = False
    if args.command == "run":
        res = harness.run_experiment(cfg, workers=args.workers, event_log=args.event_log)
        _write(harness.emit(res, args.format, args.out), args.out)
        if args.summary:
            harness.summary_csv([res], args.summary)
        strict_fail = res.non_convergent
    elif args.command == "sweep":
        results = harness.sweep(cfg, args.axis, _axis_values(args.axis, args.values), workers=args.workers)
        _write(harness.emit(results, args.format, args.out), args.out)
        strict_fail = any(r.non_convergent for r in results)
    elif args.command == "theory":
        series = harness.theory(cfg, strict=args.strict)
        _write(harness.emit(series, args.format, args.out), args.out)
    elif args.command == "compare":
        results = harness.compare(cfg, workers=args.workers)
        _write(harness.emit(results, args.format, args.out), args.out)
        if args.summary:
            harness.summary_csv(list(results.values()), args.summary)
        strict_fail = any(r.non_convergent for r in results.values())
    elif args.command == "validate":
        res = harness.run_experiment(cfg, workers=args.workers)
        report = harness.fit_report(res, tolerance=args.tolerance, strict=args.strict)
        _write(harness.emit(report, args.format, args.out), args.out)
        print(
            f"{report.algorithm}: MAD {report.relative_mad:.2%} of N-1 over {report.ramp_end} slots "
            f"(tolerance {report.tolerance:.0%}) -> {'PASS' if report.passed else 'FAIL'}",
            file=sys.stderr,
        )
        strict_fail = not report.passed or res.non_convergent
    if args.strict and strict_fail:
        print("strict mode: non-convergent or out-of-tolerance result", file=sys.stderr)
        return EXIT_STRICT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
