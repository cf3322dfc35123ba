"""Experiment configuration: JSON file plus CLI overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

EXPERIMENTS = (
    "model-a",
    "ungm",
    "model-b-sweep",
    "ungm-noise-sweep",
    "model-a-noise-sweep",
    "ungm-particle-sweep",
    "pofb-vs-x",
    "pofb-vs-y",
    "pofb-vs-min",
    "mtt-ct",
    "mtt-clutter-sweep",
    "mtt-multisensor",
    "ghost",
)

# paper-scale MC counts are roughly double the desk defaults
_DEFAULT_RUNS = {
    "model-a": (100, 200),
    "ungm": (50, 100),
    "model-b-sweep": (100, 1000),
    "ungm-noise-sweep": (50, 100),
    "model-a-noise-sweep": (50, 100),
    "ungm-particle-sweep": (20, 100),
    "mtt-ct": (20, 100),
    "mtt-clutter-sweep": (10, 100),
    "mtt-multisensor": (20, 100),
    "ghost": (20, 100),
}
_DEFAULT_STEPS = {
    "model-a": (60, 60),
    "ungm": (100, 100),
    "model-b-sweep": (500, 1000),
    "ungm-noise-sweep": (100, 100),
    "model-a-noise-sweep": (60, 60),
    "ungm-particle-sweep": (100, 100),
    "mtt-ct": (100, 100),
    "mtt-clutter-sweep": (100, 100),
    "mtt-multisensor": (100, 100),
    "ghost": (100, 100),
}
_DEFAULT_PARTICLES = {
    "model-a": 200,
    "ungm": 100,
    "ungm-noise-sweep": 100,
    "model-a-noise-sweep": 200,
    "ungm-particle-sweep": 100,
}
DEFAULT_ESTIMATORS = {
    "model-a": ["ekf", "ukf", "sir", "ekpf", "ukpf", "o2"],
    "ungm": ["ekf", "ukf", "sir", "gpf", "apf", "o2", "o2-pf-sign", "o2-true-sign", "o2-unbiased"],
    "model-b-sweep": ["kf", "o2"],
    "ungm-noise-sweep": ["ekf", "ukf", "sir", "gpf", "apf", "o2", "o2-true-sign", "o2-unbiased"],
    "model-a-noise-sweep": ["ekf", "ukf", "sir", "ekpf", "ukpf", "o2", "o2-true-sign"],
    "ungm-particle-sweep": ["sir", "gpf", "apf"],
}

VALID_ESTIMATORS = (
    "kf", "ekf", "ukf", "sir", "apf", "gpf", "ekpf", "ukpf",
    "o2", "o2-pf-sign", "o2-true-sign", "o2-unbiased",
)


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    runs: int | None = None
    steps: int | None = None
    particles: int | None = None
    estimators: tuple = ()
    paper_scale: bool = False
    jobs: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; one of {EXPERIMENTS}")
        if self.runs is not None and self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.steps is not None and self.steps < 1:
            raise ConfigError("steps must be >= 1")
        for est in self.estimators:
            if est not in VALID_ESTIMATORS:
                raise ConfigError(f"unknown estimator {est!r}")

    def _pick(self, table, override):
        if override is not None:
            return override
        desk, paper = table.get(self.experiment, (1, 1))
        return paper if self.paper_scale else desk

    @property
    def n_runs(self) -> int:
        return self._pick(_DEFAULT_RUNS, self.runs)

    @property
    def n_steps(self) -> int:
        return self._pick(_DEFAULT_STEPS, self.steps)

    @property
    def n_particles(self) -> int:
        if self.particles is not None:
            return self.particles
        return _DEFAULT_PARTICLES.get(self.experiment, 100)

    @property
    def estimator_names(self) -> list:
        if self.estimators:
            return list(self.estimators)
        return list(DEFAULT_ESTIMATORS.get(self.experiment, []))

    def param(self, key, default=None):
        return self.params.get(key, default)


def load_config(path: str, **overrides) -> ExperimentConfig:
    """Read a JSON config file; keyword overrides win over file values."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    known = {
        "experiment", "seed", "runs", "steps", "particles",
        "estimators", "paper_scale", "jobs", "params",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    if "estimators" in merged and merged["estimators"] is not None:
        merged["estimators"] = tuple(merged["estimators"])
    if "experiment" not in merged:
        raise ConfigError("config needs an 'experiment' id")
    return ExperimentConfig(**merged)
