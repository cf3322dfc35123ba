"""Bootstrap SMC-PHD filter and multi-estimate extraction.

The particle weights carry intensity mass: their sum is the expected
target count, not 1.  Prediction propagates survivors (weight times the
survival probability) and injects fresh birth particles; the update
applies the standard first-moment correction

    w_i <- [1 - pD(x_i) + sum_z pD(x_i) g(z|x_i) / (kappa + sum_j pD g w)] w_i

and resampling re-budgets to a fixed particle count per expected target.

Extraction offers three routes on the same updated intensity: weighted
k-means over the particles (k = rounded mass), the per-observation
likelihood-weighted particle mean (for observations the update identifies
as target-originated), and the direct observation inversion of those same
identified observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import as_generator
from .ct import SensorModel, ct_transition, invert_range_bearing, reflect_half_disc
from .scenario import BirthModel

MASS_FLOOR = 1e-6


@dataclass(frozen=True)
class PhdConfig:
    particles_per_target: int = 1000
    min_particles: int = 600
    birth_particles_per_component: int = 400
    sigma_w: float = 15.0
    sigma_u: float = math.pi / 180.0
    identify_threshold: float = 0.5   # observation mass that flags a target origin
    contain_range: float | None = None   # optional half-disc containment of the dynamics


@dataclass
class PhdStepInfo:
    """Update-stage quantities cached for estimate extraction."""

    particles: np.ndarray        # pre-resample particle states
    predicted_weights: np.ndarray
    updated_weights: np.ndarray
    pd: np.ndarray
    lik: np.ndarray              # (n_particles, n_obs) likelihoods
    obs_mass: np.ndarray         # per-observation updated mass
    scan: np.ndarray
    mass: float
    n_hat: int
    degeneracy: bool = False


def smc_phd_step(
    particles: np.ndarray,
    weights: np.ndarray,
    scan: np.ndarray,
    sensor: SensorModel,
    birth: BirthModel,
    rng,
    config: PhdConfig = PhdConfig(),
) -> tuple[np.ndarray, np.ndarray, PhdStepInfo]:
    """One PHD predict/update/resample cycle.

    Returns (particles, weights, info); weights sum to the posterior
    expected target count.
    """
    gen = as_generator(rng)
    # predict: survivors keep p_s of their mass, births arrive per component
    if len(particles):
        surv = ct_transition(particles, gen, 1.0, config.sigma_w, config.sigma_u)
        if config.contain_range is not None:
            surv = reflect_half_disc(surv, config.contain_range)
        w_surv = birth.survival * weights
    else:
        surv = np.empty((0, 5))
        w_surv = np.empty(0)
    born = []
    w_born = []
    jb = config.birth_particles_per_component
    for i in range(len(birth.rates)):
        born.append(birth.sample(i, jb, gen))
        w_born.append(np.full(jb, birth.rates[i] / jb))
    parts = np.vstack([surv] + born)
    w_pred = np.concatenate([w_surv] + w_born)

    # update
    n_obs = len(scan)
    pd = sensor.pd(parts)
    if n_obs:
        lik = np.exp(sensor.loglik_matrix(scan, parts))  # (n_particles, n_obs)
        pgw = pd[:, None] * lik * w_pred[:, None]
        col = pgw.sum(axis=0)
        denom = sensor.clutter_intensity() + col
        obs_mass = col / denom
        w_upd = (1.0 - pd) * w_pred + (pgw / denom).sum(axis=1)
    else:
        lik = np.empty((len(parts), 0))
        obs_mass = np.empty(0)
        w_upd = (1.0 - pd) * w_pred

    mass = float(w_upd.sum())
    degenerate = mass < MASS_FLOOR
    if degenerate:
        mass = MASS_FLOOR
        w_upd = np.full(len(parts), mass / len(parts))
    n_hat = int(round(mass))

    info = PhdStepInfo(
        particles=parts,
        predicted_weights=w_pred,
        updated_weights=w_upd,
        pd=pd,
        lik=lik,
        obs_mass=obs_mass,
        scan=np.asarray(scan, dtype=float).reshape(n_obs, -1) if n_obs else np.empty((0, 2)),
        mass=mass,
        n_hat=n_hat,
        degeneracy=degenerate,
    )

    # resample to the per-target particle budget
    target = max(config.min_particles, config.particles_per_target * max(n_hat, 0))
    probs = w_upd / w_upd.sum()
    pos = (gen.random() + np.arange(target)) / target
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, pos)
    new_parts = parts[idx]
    new_weights = np.full(target, mass / target)
    return new_parts, new_weights, info


class SmcPhd:
    """Stateful wrapper running the PHD recursion over a scan sequence."""

    def __init__(
        self,
        sensor: SensorModel,
        birth: BirthModel | None = None,
        config: PhdConfig = PhdConfig(),
        rng=None,
    ):
        self.sensor = sensor
        self.birth = birth or BirthModel.default_ct()
        self.config = config
        self.gen = as_generator(rng)
        self.particles = np.empty((0, 5))
        self.weights = np.empty(0)
        self.degeneracy_events = 0

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def step(self, scan: np.ndarray) -> PhdStepInfo:
        self.particles, self.weights, info = smc_phd_step(
            self.particles, self.weights, scan, self.sensor, self.birth, self.gen, self.config
        )
        self.degeneracy_events += info.degeneracy
        return info


def identified_observations(info: PhdStepInfo, threshold: float = 0.5) -> np.ndarray:
    """Indices of scan observations the update attributes to targets."""
    if len(info.obs_mass) == 0:
        return np.empty(0, dtype=int)
    return np.flatnonzero(info.obs_mass > threshold)


def weighted_kmeans(points, weights, k, gen, iters: int = 50):
    """Standard weighted k-means with k-means++ style seeding."""
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    n = len(pts)
    k = min(k, n)
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[gen.choice(n, p=w)]
    for j in range(1, k):
        d2 = np.min(((pts[:, None, :] - centers[None, :j, :]) ** 2).sum(axis=2), axis=1)
        probs = w * d2
        total = probs.sum()
        probs = w if total <= 0 else probs / total
        centers[j] = pts[gen.choice(n, p=probs)]
    assign = np.zeros(n, dtype=int)
    for _ in range(iters):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        if np.array_equal(new_assign, assign) and _ > 0:
            break
        assign = new_assign
        for j in range(k):
            mask = assign == j
            wj = w[mask].sum()
            if wj > 0:
                centers[j] = (w[mask, None] * pts[mask]).sum(axis=0) / wj
            else:
                centers[j] = pts[gen.choice(n, p=w)]
    return centers, assign


def _extract_kmeans(info: PhdStepInfo, gen) -> np.ndarray:
    if info.n_hat < 1:
        return np.empty((0, 5))
    pos = info.particles[:, (0, 2)]
    _, assign = weighted_kmeans(pos, info.updated_weights, info.n_hat, gen)
    out = []
    for j in range(info.n_hat):
        mask = assign == j
        wj = info.updated_weights[mask]
        if wj.sum() <= 0:
            continue
        out.append((wj[:, None] * info.particles[mask]).sum(axis=0) / wj.sum())
    return np.vstack(out) if out else np.empty((0, 5))


def _extract_meap(info: PhdStepInfo, threshold: float) -> np.ndarray:
    idx = identified_observations(info, threshold)
    out = []
    for j in idx:
        gw = info.lik[:, j] * info.predicted_weights
        total = gw.sum()
        if total <= 0:
            continue
        out.append((gw[:, None] * info.particles).sum(axis=0) / total)
    return np.vstack(out) if out else np.empty((0, 5))


def _extract_o2(info: PhdStepInfo, sensor: SensorModel, threshold: float,
                prev_estimates: np.ndarray | None = None, dt: float = 1.0) -> np.ndarray:
    idx = identified_observations(info, threshold)
    if len(idx) == 0:
        return np.empty((0, 5))
    pos = sensor.invert(info.scan[idx])
    out = np.zeros((len(pos), 5))
    out[:, 0] = pos[:, 0]
    out[:, 2] = pos[:, 1]
    if prev_estimates is not None and len(prev_estimates):
        # velocity by position differencing against the nearest prior estimate
        prev_pos = prev_estimates[:, (0, 2)]
        gate = 3.0 * float(np.max(sensor.mapped_position_std(pos))) + 3.0 * 15.0 * dt
        for i in range(len(pos)):
            d = np.hypot(prev_pos[:, 0] - pos[i, 0], prev_pos[:, 1] - pos[i, 1])
            j = int(np.argmin(d))
            if d[j] <= gate:
                out[i, 1] = (pos[i, 0] - prev_pos[j, 0]) / dt
                out[i, 3] = (pos[i, 1] - prev_pos[j, 1]) / dt
    return out


def extract_estimates(
    info: PhdStepInfo,
    sensor: SensorModel,
    method: str = "meap",
    rng=None,
    prev_estimates: np.ndarray | None = None,
    threshold: float = 0.5,
) -> np.ndarray:
    """Multi-estimate extraction from one PHD update; returns (k, 5) states."""
    if method == "kmeans":
        return _extract_kmeans(info, as_generator(rng))
    if method == "meap":
        return _extract_meap(info, threshold)
    if method == "o2":
        return _extract_o2(info, sensor, threshold, prev_estimates)
    raise ValueError(f"unknown extraction method {method!r}")
