"""Experiment orchestration: configs, seeded Monte Carlo fan-out,
estimator wiring, and CSV/plot-data emission."""

from .config import ConfigError, ExperimentConfig
from .experiments import run_experiment
from .report import ExperimentReport, emit_plotdata

__all__ = ["ConfigError", "ExperimentConfig", "run_experiment", "ExperimentReport", "emit_plotdata"]
