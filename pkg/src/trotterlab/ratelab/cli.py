"""``ratelab`` command: run one experiment and write its CSV and summary.

Exit status is 0 when every gate passes, 2 when a gate fails and 1 on usage
or configuration errors.
"""
from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ExperimentConfig, load_config
from .experiments import run_experiment
from .report import format_csv, format_summary, summary_path, write_csv, write_summary

__all__ = ["main", "build_parser", "UsageError"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _n_list(text: str) -> tuple:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ratelab", description="Lattice-to-continuum convergence-rate experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--d", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--n", type=_n_list, dest="n_list", help="comma-separated n values")
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--b", type=float)
    p.add_argument("--out", help="CSV path; the summary goes next to it")
    return p


def _config(args) -> ExperimentConfig:
    overrides = dict(d=args.d, t=args.t, n_list=args.n_list, lam=args.lam, b=args.b, out=args.out)
    if args.config:
        cfg = load_config(args.config)
        if cfg.experiment != args.experiment:
            cfg = cfg.with_overrides(experiment=args.experiment)
        return cfg.with_overrides(**overrides)
    return ExperimentConfig(args.experiment, **{k: v for k, v in overrides.items() if v is not None})


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"ratelab: error: {exc}", file=sys.stderr)
        return 1
    result = run_experiment(cfg)
    if cfg.out:
        write_csv(result, cfg.out)
        write_summary(result, summary_path(cfg.out))
    else:
        sys.stdout.write(format_csv(result))
    sys.stdout.write(format_summary(result))
    return 0 if result.passed else 2


if __name__ == "__main__":
    sys.exit(main())
