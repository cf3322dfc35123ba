"""Planar target kinematics and sensors.

State layout is [px, vx, py, vy, omega]: position, velocity, turn rate.
The nearly-constant-turn transition rotates the velocity by omega*dt each
step (with the straight-line limit at omega -> 0).  Sensors are either
range-bearing (bearing measured from the +y axis, the scenario lives in
the py > 0 half disc) or direct-position with additive noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import as_generator

STATE_DIM = 5
POS_IDX = (0, 2)


def ct_transition_matrix(omega: float, dt: float = 1.0) -> np.ndarray:
    """4x4 turn matrix on [px, vx, py, vy] for a single turn rate."""
    if abs(omega) < 1e-10:
        F = np.eye(4)
        F[0, 1] = dt
        F[2, 3] = dt
        return F
    s, c = math.sin(omega * dt), math.cos(omega * dt)
    return np.array(
        [
            [1.0, s / omega, 0.0, -(1.0 - c) / omega],
            [0.0, c, 0.0, -s],
            [0.0, (1.0 - c) / omega, 1.0, s / omega],
            [0.0, s, 0.0, c],
        ]
    )


def ct_transition(
    states: np.ndarray,
    rng=None,
    dt: float = 1.0,
    sigma_w: float = 15.0,
    sigma_u: float = math.pi / 180.0,
) -> np.ndarray:
    """Nearly-constant-turn step, vectorized over (n, 5) states.

    rng=None gives the noiseless map.  sigma_w is the acceleration noise
    (m/s^2) entering through the [dt^2/2, dt] gain; sigma_u drives the
    turn-rate random walk.
    """
    x = np.atleast_2d(np.asarray(states, dtype=float))
    px, vx, py, vy, om = x.T
    small = np.abs(om) < 1e-10
    om_safe = np.where(small, 1.0, om)
    s = np.where(small, dt, np.sin(om_safe * dt) / om_safe)
    c1 = np.where(small, 0.0, (1.0 - np.cos(om_safe * dt)) / om_safe)
    cos = np.cos(om * dt)
    sin = np.sin(om * dt)
    out = np.empty_like(x)
    out[:, 0] = px + s * vx - c1 * vy
    out[:, 1] = cos * vx - sin * vy
    out[:, 2] = c1 * vx + py + s * vy
    out[:, 3] = sin * vx + cos * vy
    out[:, 4] = om
    if rng is not None:
        gen = as_generator(rng)
        w = gen.normal(0.0, sigma_w, size=(x.shape[0], 2))
        out[:, 0] += 0.5 * dt * dt * w[:, 0]
        out[:, 1] += dt * w[:, 0]
        out[:, 2] += 0.5 * dt * dt * w[:, 1]
        out[:, 3] += dt * w[:, 1]
        out[:, 4] += dt * gen.normal(0.0, sigma_u, size=x.shape[0])
    return out if np.ndim(states) == 2 else out[0]


def reflect_half_disc(states: np.ndarray, max_range: float = 2000.0) -> np.ndarray:
    """Specular reflection keeping states inside the half-disc region.

    The surveillance scenario contains its targets (death is a separate
    Bernoulli process), so both truth generation and any filter using the
    true dynamics apply the same containment.
    """
    x = np.atleast_2d(np.asarray(states, dtype=float)).copy()
    below = x[:, 2] < 0.0
    x[below, 2] = -x[below, 2]
    x[below, 3] = -x[below, 3]
    r = np.hypot(x[:, 0], x[:, 2])
    out = r > max_range
    if np.any(out):
        nx = x[out, 0] / r[out]
        ny = x[out, 2] / r[out]
        back = 2 * max_range - r[out]
        x[out, 0] = nx * back
        x[out, 2] = ny * back
        vr = x[out, 1] * nx + x[out, 3] * ny
        pos = vr > 0
        x0 = x[out]
        x0[pos, 1] -= 2 * vr[pos] * nx[pos]
        x0[pos, 3] -= 2 * vr[pos] * ny[pos]
        x[out] = x0
        below = x[:, 2] < 0.0
        x[below, 2] = -x[below, 2]
        x[below, 3] = -x[below, 3]
    return x if np.ndim(states) == 2 else x[0]


def observe_range_bearing(
    states: np.ndarray,
    rng=None,
    sigma_r: float = 5.0,
    sigma_theta: float = math.pi / 180.0,
) -> np.ndarray:
    """(range, bearing) of each state; bearing = arctan(px / py)."""
    x = np.atleast_2d(np.asarray(states, dtype=float))
    if x.shape[1] >= 3:
        px, py = x[:, 0], x[:, 2]
    else:
        px, py = x[:, 0], x[:, 1]
    z = np.column_stack([np.hypot(px, py), np.arctan2(px, py)])
    if rng is not None:
        gen = as_generator(rng)
        z[:, 0] += gen.normal(0.0, sigma_r, size=len(z))
        z[:, 1] += gen.normal(0.0, sigma_theta, size=len(z))
    return z if np.ndim(states) == 2 else z[0]


def invert_range_bearing(z: np.ndarray) -> np.ndarray:
    """Map (range, bearing) back to a planar position: (r sin th, r cos th)."""
    single = np.ndim(z) == 1
    zz = np.atleast_2d(np.asarray(z, dtype=float))
    out = np.column_stack([zz[:, 0] * np.sin(zz[:, 1]), zz[:, 0] * np.cos(zz[:, 1])])
    return out[0] if single else out


def detection_probability(positions: np.ndarray, pd_max: float = 0.95, scale: float = 6000.0):
    """Range-dependent detection probability, 0.95 at the origin."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    return pd_max * np.exp(-(p[:, 0] ** 2 + p[:, 1] ** 2) / (2.0 * scale**2))


@dataclass(frozen=True)
class SensorModel:
    """One sensor: observation map, noise, detection and clutter models."""

    kind: str                       # "range-bearing" | "position"
    sigma_r: float = 5.0
    sigma_theta: float = math.pi / 180.0
    sigma_xy: float = 5.0
    pd_max: float = 0.95
    pd_scale: float = 6000.0        # 0 disables range dependence
    pd_const: float | None = None   # overrides the range model entirely
    clutter_rate: float = 10.0
    max_range: float = 2000.0
    view_halfwidth: float = 100.0
    fused_count: int = 1            # synthetic sensor standing in for N fused sensors

    def pd(self, states: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(states, dtype=float))
        pos = x[:, POS_IDX] if x.shape[1] >= STATE_DIM else x[:, :2]
        if self.pd_const is not None:
            base = np.full(len(pos), self.pd_const)
        else:
            base = detection_probability(pos, self.pd_max, self.pd_scale)
        if self.fused_count > 1:
            # a fused bank detects whatever any member detects
            return 1.0 - (1.0 - base) ** self.fused_count
        return base

    def observe(self, states: np.ndarray, rng) -> np.ndarray:
        if self.kind == "range-bearing":
            return np.atleast_2d(observe_range_bearing(states, rng, self.sigma_r, self.sigma_theta))
        x = np.atleast_2d(np.asarray(states, dtype=float))
        pos = x[:, POS_IDX] if x.shape[1] >= STATE_DIM else x[:, :2]
        gen = as_generator(rng)
        return pos + gen.normal(0.0, self.sigma_xy, size=pos.shape)

    def invert(self, zs: np.ndarray) -> np.ndarray:
        """Observation-only map into position space."""
        zs = np.atleast_2d(np.asarray(zs, dtype=float))
        if self.kind == "range-bearing":
            return np.column_stack([zs[:, 0] * np.sin(zs[:, 1]), zs[:, 0] * np.cos(zs[:, 1])])
        return zs.copy()

    def loglik(self, z: np.ndarray, states: np.ndarray) -> np.ndarray:
        """log g(z | x) for one observation against many states."""
        return self.loglik_matrix(np.asarray(z, dtype=float)[None, :], states)[:, 0]

    def loglik_matrix(self, scan: np.ndarray, states: np.ndarray) -> np.ndarray:
        """(n_states, n_obs) log-likelihoods; predictions computed once."""
        x = np.atleast_2d(np.asarray(states, dtype=float))
        zs = np.atleast_2d(np.asarray(scan, dtype=float))
        if self.kind == "range-bearing":
            pred = observe_range_bearing(x, None)
            dr = zs[None, :, 0] - pred[:, 0, None]
            dth = zs[None, :, 1] - pred[:, 1, None]
            return (
                -0.5 * (dr * dr / self.sigma_r**2 + dth * dth / self.sigma_theta**2)
                - math.log(2 * math.pi * self.sigma_r * self.sigma_theta)
            )
        pos = x[:, POS_IDX] if x.shape[1] >= STATE_DIM else x[:, :2]
        v = self.sigma_xy**2
        d2 = (zs[None, :, 0] - pos[:, 0, None]) ** 2 + (zs[None, :, 1] - pos[:, 1, None]) ** 2
        return -0.5 * d2 / v - math.log(2 * math.pi * v)

    def clutter_intensity(self) -> float:
        """Clutter density per unit observation volume."""
        if self.kind == "range-bearing":
            return self.clutter_rate / self.max_range / math.pi
        return self.clutter_rate / (2.0 * self.view_halfwidth) ** 2

    def sample_clutter(self, rng) -> np.ndarray:
        gen = as_generator(rng)
        n = gen.poisson(self.clutter_rate)
        if self.kind == "range-bearing":
            r = gen.uniform(0.0, self.max_range, n)
            th = gen.uniform(-math.pi / 2, math.pi / 2, n)
            return np.column_stack([r, th])
        w = self.view_halfwidth
        return gen.uniform(-w, w, size=(n, 2))

    def mapped_position_std(self, points: np.ndarray) -> np.ndarray:
        """Rough per-point std of the observation noise mapped to position."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "range-bearing":
            rng_ = np.hypot(p[:, 0], p[:, 1])
            return np.sqrt(self.sigma_r**2 + (rng_ * self.sigma_theta) ** 2)
        return np.full(len(p), self.sigma_xy)


def range_bearing_sensor(
    sigma_r: float = 5.0,
    sigma_theta: float = math.pi / 180.0,
    clutter_rate: float = 10.0,
    pd_const: float | None = None,
    fused_count: int = 1,
) -> SensorModel:
    return SensorModel(
        "range-bearing",
        sigma_r=sigma_r,
        sigma_theta=sigma_theta,
        clutter_rate=clutter_rate,
        pd_const=pd_const,
        fused_count=fused_count,
    )


def position_sensor(
    sigma_xy: float = 5.0,
    clutter_rate: float = 10.0,
    view_halfwidth: float = 100.0,
    pd_const: float | None = 0.95,
) -> SensorModel:
    return SensorModel(
        "position",
        sigma_xy=sigma_xy,
        clutter_rate=clutter_rate,
        view_halfwidth=view_halfwidth,
        pd_const=pd_const,
    )
