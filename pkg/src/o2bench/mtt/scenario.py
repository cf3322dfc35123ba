"""Multi-target scenario generation.

The coordinated-turn scenario: targets are born from a four-component
Gaussian birth intensity over a half-disc surveillance region, survive
with probability 0.99 per step, maneuver under the nearly-constant-turn
model, and die when they leave the region.  Each sensor reports noisy
range-bearing detections (probability falling off with range) plus
uniform Poisson clutter.

The ghost scenario: targets with mixed, undisclosed motion models over a
square view region, watched by direct-position sensors.  The tracker side
gets nothing but the observation function, which is the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import as_generator
from .ct import SensorModel, ct_transition, position_sensor, range_bearing_sensor


@dataclass(frozen=True)
class BirthModel:
    """Poisson birth intensity: a few Gaussian components with small rates."""

    means: np.ndarray
    cov: np.ndarray
    rates: np.ndarray
    survival: float = 0.99

    @classmethod
    def default_ct(cls) -> "BirthModel":
        means = np.array(
            [
                [-1500.0, 0.0, 250.0, 0.0, 0.0],
                [-250.0, 0.0, 1000.0, 0.0, 0.0],
                [250.0, 0.0, 750.0, 0.0, 0.0],
                [1000.0, 0.0, 1500.0, 0.0, 0.0],
            ]
        )
        cov = np.diag(np.array([50.0, 50.0, 50.0, 50.0, 6.0 * math.pi / 180.0]) ** 2)
        rates = np.array([0.02, 0.02, 0.03, 0.03])
        return cls(means, cov, rates)

    @property
    def total_rate(self) -> float:
        return float(np.sum(self.rates))

    def sample(self, component: int, n: int, gen) -> np.ndarray:
        L = np.linalg.cholesky(self.cov)
        z = gen.standard_normal((n, self.means.shape[1]))
        return self.means[component] + z @ L.T


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "ct"                  # "ct" | "ghost"
    steps: int = 100
    n_sensors: int = 1
    clutter_rate: float = 10.0
    sigma_r: float = 5.0
    sigma_theta: float = math.pi / 180.0
    sigma_w: float = 15.0
    sigma_u: float = math.pi / 180.0
    survival: float = 0.99
    max_range: float = 2000.0
    seed_targets: tuple = ()          # states planted at t=1 (on top of random births)
    birth_rate_scale: float = 1.0     # 0 disables random births
    pd_const: float | None = None     # overrides the range-dependent detection law
    # ghost options
    ghost_noise_var: float = 25.0
    view_halfwidth: float = 100.0
    ghost_targets: int = 8
    extra_sensors: tuple = ()         # appended SensorModels (e.g. an OFT super sensor)

    def sensors(self) -> list[SensorModel]:
        if self.kind == "ct":
            base = [
                range_bearing_sensor(
                    self.sigma_r, self.sigma_theta, self.clutter_rate, self.pd_const
                )
                for _ in range(self.n_sensors)
            ]
        else:
            base = [
                position_sensor(
                    math.sqrt(self.ghost_noise_var),
                    self.clutter_rate,
                    self.view_halfwidth,
                    0.95 if self.pd_const is None else self.pd_const,
                )
                for _ in range(self.n_sensors)
            ]
        return base + list(self.extra_sensors)


@dataclass
class Scenario:
    """Ground truth plus per-sensor scans; scans[t][s] is an (m, 2) array."""

    truth: list            # per step: (n_t, 5) states
    scans: list            # per step: list per sensor of (m, 2) observations
    config: ScenarioConfig
    sensors: list

    @property
    def steps(self) -> int:
        return len(self.truth)

    def cardinality(self) -> np.ndarray:
        return np.array([len(x) for x in self.truth])




def _make_scans(states: np.ndarray, sensors, gen) -> list:
    scans = []
    for sensor in sensors:
        parts = []
        if len(states):
            det = gen.random(len(states)) < sensor.pd(states)
            if np.any(det):
                parts.append(sensor.observe(states[det], gen))
        clut = sensor.sample_clutter(gen)
        if len(clut):
            parts.append(clut)
        if parts:
            scan = np.vstack(parts)
            gen.shuffle(scan)       # observations are unlabeled
        else:
            scan = np.empty((0, 2))
        scans.append(scan)
    return scans


def _generate_ct(config: ScenarioConfig, birth: BirthModel, gen) -> Scenario:
    sensors = config.sensors()
    alive = [np.asarray(s, dtype=float) for s in config.seed_targets]
    truth, scans = [], []
    for _ in range(config.steps):
        survivors = []
        for x in alive:
            if gen.random() >= config.survival:
                continue
            x = ct_transition(x, gen, 1.0, config.sigma_w, config.sigma_u)
            # leaving the surveillance half-disc ends the track
            if x[2] > 0.0 and math.hypot(x[0], x[2]) <= config.max_range:
                survivors.append(x)
        for i in range(len(birth.rates)):
            n = gen.poisson(birth.rates[i] * config.birth_rate_scale)
            if n:
                survivors.extend(birth.sample(i, n, gen))
        alive = survivors
        states = np.vstack(alive) if alive else np.empty((0, 5))
        truth.append(states)
        scans.append(_make_scans(states, sensors, gen))
    return Scenario(truth, scans, config, sensors)


_GHOST_KINDS = ("cv", "near-cv", "nct", "noisy-ct", "static")


def _ghost_step(state: np.ndarray, kind: str, gen, halfwidth: float) -> np.ndarray:
    if kind == "static":
        out = state.copy()
    elif kind == "cv":
        out = ct_transition(state, None)
    elif kind == "near-cv":
        out = ct_transition(state, gen, 1.0, 0.15, 0.0)
    elif kind == "nct":
        out = ct_transition(state, gen, 1.0, 0.1, 0.5 * math.pi / 180.0)
    else:  # noisy-ct
        out = ct_transition(state, gen, 1.0, 0.8, 3.0 * math.pi / 180.0)
    # bounce off the view border so ghosts wander but stay observable
    for pi, vi in ((0, 1), (2, 3)):
        if abs(out[pi]) > halfwidth:
            out[pi] = math.copysign(2 * halfwidth, out[pi]) - out[pi]
            out[vi] = -out[vi]
    return out


def _generate_ghost(config: ScenarioConfig, gen) -> Scenario:
    sensors = config.sensors()
    w = config.view_halfwidth
    plans = []
    positions = []
    for _ in range(config.ghost_targets):
        t0 = int(gen.integers(1, max(2, int(config.steps * 0.7))))
        dur = int(gen.integers(20, config.steps + 1))
        kind = _GHOST_KINDS[int(gen.integers(len(_GHOST_KINDS)))]
        # births keep a little mutual distance; crossings still happen later
        for _ in range(20):
            pos = gen.uniform(-0.8 * w, 0.8 * w, 2)
            if not positions or min(np.hypot(*(pos - p)) for p in positions) > 20.0:
                break
        positions.append(pos)
        speed = gen.uniform(0.5, 2.8)
        heading = gen.uniform(0.0, 2 * math.pi)
        omega = gen.uniform(-0.2, 0.2) if "ct" in kind or kind == "nct" else 0.0
        state = np.array(
            [pos[0], speed * math.cos(heading), pos[1], speed * math.sin(heading), omega]
        )
        plans.append({"t0": t0, "t1": min(config.steps, t0 + dur), "kind": kind, "x": state})
    truth, scans = [], []
    for t in range(1, config.steps + 1):
        states = []
        for p in plans:
            if p["t0"] <= t <= p["t1"]:
                if t > p["t0"]:
                    p["x"] = _ghost_step(p["x"], p["kind"], gen, w)
                states.append(p["x"].copy())
        arr = np.vstack(states) if states else np.empty((0, 5))
        truth.append(arr)
        scans.append(_make_scans(arr, sensors, gen))
    return Scenario(truth, scans, config, sensors)


def generate_scenario(config: ScenarioConfig, rng, birth: BirthModel | None = None) -> Scenario:
    """Draw one ground-truth realization plus all sensor scans."""
    gen = as_generator(rng)
    if config.kind == "ct":
        b = birth or BirthModel.default_ct()
        if config.survival != b.survival:
            b = BirthModel(b.means, b.cov, b.rates, config.survival)
        return _generate_ct(config, b, gen)
    if config.kind == "ghost":
        return _generate_ghost(config, gen)
    raise ValueError(f"unknown scenario kind {config.kind!r}")
