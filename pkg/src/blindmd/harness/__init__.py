"""Experiment orchestration: config parsing, seeded Monte Carlo runners, and
result emission."""

from .config import BlindParams, ConfigError, ExperimentConfig, config_from_dict, load_config
from .experiments import (
    RUNNERS,
    run_ber_sweep,
    run_tap_error,
    run_temporal,
    run_utilization,
    trial_rng,
)
from .results import ResultRow, ResultTable, emit_results, table_to_csv, table_to_json

__all__ = [
    "BlindParams",
    "ConfigError",
    "ExperimentConfig",
    "config_from_dict",
    "load_config",
    "RUNNERS",
    "run_ber_sweep",
    "run_tap_error",
    "run_temporal",
    "run_utilization",
    "trial_rng",
    "ResultRow",
    "ResultTable",
    "emit_results",
    "table_to_csv",
    "table_to_json",
]
