"""Command-line entry point: validate, simulate, evaluate, compare."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import validate_dataset
from .data import ScoreFileError, format_report, load_score_file, save_score_file
from .evaluation import DEFAULT_GRID, PREDICTORS, TrialConfig, check_grid, run_trials
from .synthetic import SynthConfig, fixture, fixture_names, synthesize

CASCADES = ("cascade-cp", "cascade-min-cp")


class CliError(Exception):
    pass


def parse_grid(text: str) -> np.ndarray:
    """``default``, a comma list ``0.05,0.1``, or a range ``start:stop:step`` (stop inclusive)."""
    text = text.strip()
    try:
        if text == "default":
            values = DEFAULT_GRID
        elif ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            count = int(round((stop - start) / step)) + 1
            values = [round(start + i * step, 10) for i in range(count)]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
        return check_grid(values)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None


def _add_eval_args(p: argparse.ArgumentParser):
    p.add_argument("score_file", type=Path)
    p.add_argument("--correction", choices=("bonferroni", "simes", "none"), default=None,
                   help="MHT correction for cascaded predictors (default: bonferroni)")
    p.add_argument("--grid", type=parse_grid, default=parse_grid("default"),
                   help="tolerances: 'default' (0.01..0.99), 'a,b,c', or 'start:stop:step'")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--cal-frac", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layer", type=int, default=-1, help="score layer for single-layer predictors")
    p.add_argument("--out", default="-", help="report path, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confcascade", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a score file")
    p.add_argument("score_file", type=Path)

    p = sub.add_parser("simulate", help="write a synthetic score file")
    p.add_argument("config", help=f"generator config JSON, or a shipped fixture: {', '.join(fixture_names())}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("evaluate", help="run the trial protocol for one predictor")
    _add_eval_args(p)
    p.add_argument("--predictor", choices=PREDICTORS, required=True)

    p = sub.add_parser("compare", help="run several predictors on shared splits")
    _add_eval_args(p)
    p.add_argument("--predictors", default="cp,min-cp",
                   help=f"comma-separated subset of {','.join(PREDICTORS)}")
    return parser


def _load(path: Path):
    try:
        return load_score_file(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except ScoreFileError as exc:
        raise CliError(f"{path}: {exc}") from None


def _emit(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc.strerror}") from None


def cmd_validate(args) -> int:
    d = _load(args.score_file)
    problems = validate_dataset(d)
    if problems:
        for msg in problems:
            print(msg, file=sys.stderr)
        return 1
    sizes = d.label_space_sizes
    print(f"OK: {len(d)} examples, {d.layer_count} layers, {np.mean(sizes):.1f} candidates per example on average")
    return 0


def cmd_simulate(args) -> int:
    try:
        if args.config in fixture_names():
            cfg = fixture(args.config)
        else:
            cfg = SynthConfig.load(args.config)
    except OSError as exc:
        raise CliError(f"cannot read {args.config}: {exc.strerror}") from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"bad generator config {args.config}: {exc}") from None
    d = synthesize(cfg, args.seed)
    try:
        save_score_file(d, args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc.strerror}") from None
    print(f"wrote {len(d)} examples to {args.out}", file=sys.stderr)
    return 0


def cmd_evaluate(args, predictors) -> int:
    unknown = [p for p in predictors if p not in PREDICTORS]
    if unknown or not predictors:
        raise CliError(f"unknown predictors {unknown}; choose from {','.join(PREDICTORS)}")
    d = _load(args.score_file)
    if args.correction is not None:
        if d.layer_count == 1:
            print("warning: correction has no effect with a single layer", file=sys.stderr)
        if not any(p in CASCADES for p in predictors):
            print("warning: correction only applies to cascaded predictors", file=sys.stderr)
    try:
        cfg = TrialConfig(
            trial_count=args.trials,
            calibration_fraction=args.cal_frac,
            seed=args.seed,
            predictors=tuple(predictors),
            correction=args.correction or "bonferroni",
            layer=args.layer,
        )
        report = run_trials(d, args.grid, cfg)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    _emit(format_report(report), args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "evaluate":
            return cmd_evaluate(args, [args.predictor])
        return cmd_evaluate(args, [p.strip() for p in args.predictors.split(",") if p.strip()])
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
