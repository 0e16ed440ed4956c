"""Convergence-rate experiments: configs, runners, reports and the ``ratelab`` command."""
from .config import ExperimentConfig, load_config, parse_config, make_test_function
from .experiments import (
    RateReport,
    RateRow,
    BoundTable,
    fit_slope,
    run_experiment,
    run_clt,
    run_harper,
    run_voronovskaja,
    run_bound_table,
)
from .report import write_csv, write_summary, format_csv, format_summary

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "make_test_function",
    "RateReport",
    "RateRow",
    "BoundTable",
    "fit_slope",
    "run_experiment",
    "run_clt",
    "run_harper",
    "run_voronovskaja",
    "run_bound_table",
    "write_csv",
    "write_summary",
    "format_csv",
    "format_summary",
]
