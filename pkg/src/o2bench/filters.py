"""Prediction-correction estimators for the scalar benchmark models.

Gaussian family: exact Kalman step for the linear model, first-order EKF,
and UKF built on the unscented transform.  Particle family: bootstrap SIR,
auxiliary PF, Gaussian PF, and EKF/UKF-proposal particle filters, all
vectorized over particles, with unbiased systematic resampling triggered
at ESS < N/2.

When every particle likelihood underflows (tiny observation noise makes
the likelihood a near-delta), the step flags a degeneracy event and resets
the weights to uniform instead of aborting; benchmark reports count those
events because the degradation itself is a measured outcome.

All estimators here run on the model they are *given*: the deterministic
transition plus zero-mean Gaussian process noise of variance
``model.process_var``.  Where the data-generating noise is something else
(the Gamma noise of model A), that substitution is the benchmark's
admitted modelling error and applies to the whole filter family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GaussianBelief, as_generator, safe_cholesky
from .models import StateSpaceModel

PF_VARIANTS = ("sir", "apf", "gpf", "ekpf", "ukpf")


@dataclass
class ParticleSet:
    """Weighted particles approximating a density.

    ``covs`` carries optional per-particle covariances for the filters
    whose proposal runs a Gaussian sub-filter per particle (EKPF/UKPF).
    """

    particles: np.ndarray
    weights: np.ndarray
    covs: np.ndarray | None = None

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.count < 1:
            raise ValueError("a particle set needs at least one particle")
        if self.weights.shape[0] != self.count:
            raise ValueError("weights/particles length mismatch")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")

    @property
    def count(self) -> int:
        return self.particles.shape[0]

    def normalized(self) -> "ParticleSet":
        total = self.weights.sum()
        if total <= 0:
            raise ValueError("cannot normalize all-zero weights")
        return ParticleSet(self.particles, self.weights / total, self.covs)

    def ess(self) -> float:
        w = self.weights / self.weights.sum()
        return 1.0 / float(np.sum(w**2))

    def mean(self):
        w = self.weights / self.weights.sum()
        return np.tensordot(w, self.particles, axes=1)


def systematic_resample_indices(weights: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Unbiased systematic resampling: E[count of i] = N * w_i."""
    n = len(weights)
    positions = (gen.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard rounding
    return np.searchsorted(cum, positions)


def resample(ps: ParticleSet, rng) -> ParticleSet:
    """Resample to uniform weights with the systematic scheme."""
    gen = as_generator(rng)
    ps = ps.normalized()
    idx = systematic_resample_indices(ps.weights, gen)
    covs = ps.covs[idx] if ps.covs is not None else None
    return ParticleSet(ps.particles[idx], np.full(ps.count, 1.0 / ps.count), covs)


@dataclass(frozen=True)
class UnscentedParams:
    alpha: float = 1.0
    beta: float = 0.0
    kappa: float = 2.0

    def lam(self, n: int) -> float:
        lam = self.alpha**2 * (n + self.kappa) - n
        if n + lam == 0:
            raise ValueError("alpha/kappa give n + lambda == 0")
        return lam


def unscented_transform(mean, cov, fn, params: UnscentedParams = UnscentedParams()):
    """Propagate (mean, cov) through ``fn`` with 2n+1 sigma points.

    Returns (mean', cov', cross-cov).  Exact for affine maps.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    n = mean.shape[0]
    lam = params.lam(n)
    L = safe_cholesky((n + lam) * cov)
    sigma = np.empty((2 * n + 1, n))
    sigma[0] = mean
    sigma[1 : n + 1] = mean + L.T
    sigma[n + 1 :] = mean - L.T
    wm = np.full(2 * n + 1, 1.0 / (2 * (n + lam)))
    wm[0] = lam / (n + lam)
    wc = wm.copy()
    wc[0] += 1.0 - params.alpha**2 + params.beta
    ys = np.atleast_2d(np.asarray([np.atleast_1d(fn(s)) for s in sigma], dtype=float))
    my = wm @ ys
    dy = ys - my
    dx = sigma - mean
    cy = (wc[:, None] * dy).T @ dy
    cxy = (wc[:, None] * dx).T @ dy
    return my, cy, cxy


def _affine_coeffs(model: StateSpaceModel, t: int):
    # a linear model is fully determined by its value and slope at 0
    f0 = float(model.transition(0.0, t, None))
    h0 = float(model.observe(0.0, t, None))
    F = float(model.transition_jac(0.0, t))
    H = float(model.observe_jac(0.0, t))
    return F, f0, H, h0


def kalman_step(belief: GaussianBelief, y: float, t: int, model: StateSpaceModel) -> GaussianBelief:
    """Exact predict/correct for the linear-Gaussian model."""
    if not model.linear:
        raise ValueError("kalman_step requires a linear model")
    F, f0, H, h0 = _affine_coeffs(model, t)
    m, p = float(belief.mean[0]), float(belief.cov[0, 0])
    mp = F * m + f0
    pp = F * F * p + model.process_var
    s = H * H * pp + model.obs_var
    if s <= 0:
        raise np.linalg.LinAlgError("singular innovation covariance")
    k = pp * H / s
    m_new = mp + k * (y - (H * mp + h0))
    p_new = (1.0 - k * H) * pp
    return GaussianBelief(np.array([m_new]), np.array([[p_new]]))


def ekf_step(
    belief: GaussianBelief,
    y: float,
    t: int,
    model: StateSpaceModel,
    cov_cap: float | None = None,
) -> GaussianBelief:
    """First-order linearized predict/correct.

    ``cov_cap`` optionally bounds the predicted variance (a standard
    divergence guard on strongly nonlinear models whose local Jacobians
    can blow the covariance far past the state's own prior spread).
    """
    m, p = float(belief.mean[0]), float(belief.cov[0, 0])
    F = float(model.transition_jac(m, t))
    mp = float(model.transition(m, t, None))
    pp = F * F * p + model.process_var
    if cov_cap is not None:
        pp = min(pp, cov_cap)
    H = float(model.observe_jac(mp, t))
    yp = float(model.observe(mp, t, None))
    s = H * H * pp + model.obs_var
    if s <= 0:
        raise np.linalg.LinAlgError("singular innovation covariance")
    k = pp * H / s
    m_new = mp + k * (y - yp)
    p_new = (1.0 - k * H) * pp
    return GaussianBelief(np.array([m_new]), np.array([[p_new]]))


def _augmented_sigma(m, p, q, r, params: UnscentedParams):
    """Sigma points over the augmented [state, process noise, obs noise].

    Vectorized: m, p are (n,) arrays (one row per particle/track); returns
    (state points, process points, obs points) each (n, 7) plus weights.
    """
    n_aug = 3
    lam = params.lam(n_aug)
    c = math.sqrt(n_aug + lam)
    wm = np.full(2 * n_aug + 1, 1.0 / (2 * (n_aug + lam)))
    wm[0] = lam / (n_aug + lam)
    wc = wm.copy()
    wc[0] += 1.0 - params.alpha**2 + params.beta
    m = np.atleast_1d(np.asarray(m, dtype=float))
    sp = c * np.sqrt(np.maximum(np.atleast_1d(p), 1e-18))
    sq = c * math.sqrt(q)
    sr = c * math.sqrt(r)
    k = m.shape[0]
    zeros = np.zeros(k)
    xs = np.stack([m, m + sp, m, m, m - sp, m, m], axis=1)
    us = np.stack([zeros, zeros, zeros + sq, zeros, zeros, zeros - sq, zeros], axis=1)
    vs = np.stack([zeros, zeros, zeros, zeros + sr, zeros, zeros, zeros - sr], axis=1)
    return xs, us, vs, wm, wc


def ukf_step(
    belief: GaussianBelief,
    y: float,
    t: int,
    model: StateSpaceModel,
    params: UnscentedParams = UnscentedParams(),
) -> GaussianBelief:
    """Unscented predict/correct in augmented form.

    The sigma set spans [state, process noise, observation noise], so the
    noises propagate through the same points that feed the gain (exactly
    the Kalman step on an affine model, no sigma redraw in between).
    """
    m, p = float(belief.mean[0]), float(belief.cov[0, 0])
    xs, us, vs, wm, wc = _augmented_sigma([m], [p], model.process_var, model.obs_var, params)
    fx = np.asarray(model.transition(xs[0], t, None), dtype=float) + us[0]
    mp = wm @ fx
    pp = wc @ (fx - mp) ** 2
    hy = np.asarray(model.observe(fx, t, None), dtype=float) + vs[0]
    my = wm @ hy
    s = wc @ (hy - my) ** 2
    if s <= 0:
        raise np.linalg.LinAlgError("singular innovation covariance")
    cxy = wc @ ((fx - mp) * (hy - my))
    k = cxy / s
    m_new = mp + k * (y - my)
    p_new = max(pp - k * s * k, 1e-18)
    return GaussianBelief(np.array([m_new]), np.array([[p_new]]))


# ---------------------------------------------------------------------------
# particle filters (scalar state, vectorized over particles)
# ---------------------------------------------------------------------------


@dataclass
class PfStepInfo:
    estimate: float
    degeneracy: bool = False
    resampled: bool = False


def init_particles(model: StateSpaceModel, x1: float, n: int, rng, variant: str = "sir") -> ParticleSet:
    gen = as_generator(rng)
    parts = gen.normal(x1, math.sqrt(model.init_var), n)
    covs = np.full(n, model.init_var) if variant in ("ekpf", "ukpf") else None
    return ParticleSet(parts, np.full(n, 1.0 / n), covs)


def _loglik(model: StateSpaceModel, y: float, t: int, x: np.ndarray) -> np.ndarray:
    r = model.obs_var
    d = y - model.observe(x, t, None)
    return -0.5 * (d * d / r + math.log(2 * math.pi * r))


def _norm_logpdf(x, mean, var):
    d = x - mean
    return -0.5 * (d * d / var + np.log(2 * math.pi * var))


def _normalize_log(logw: np.ndarray) -> tuple[np.ndarray, bool]:
    """exp-normalize; returns (weights, degenerate?)."""
    m = np.max(logw)
    if not np.isfinite(m):
        n = len(logw)
        return np.full(n, 1.0 / n), True
    w = np.exp(logw - m)
    return w / w.sum(), False


def _finish(parts, w, covs, gen, threshold=0.5) -> tuple[ParticleSet, bool]:
    ps = ParticleSet(parts, w, covs)
    n = ps.count
    if ps.ess() < threshold * n:
        return resample(ps, gen), True
    return ps, False


def _propagate(model, x, t, gen):
    """Sample the filter's assumed transition: f(x) + N(0, process_var)."""
    d = np.asarray(model.transition(x, t, None), dtype=float)
    return d + gen.normal(0.0, math.sqrt(model.process_var), size=d.shape)


def _step_sir(ps, y, t, model, gen):
    parts = _propagate(model, ps.particles, t, gen)
    with np.errstate(divide="ignore"):
        logw = np.log(ps.weights) + _loglik(model, y, t, parts)
    w, degen = _normalize_log(logw)
    est = float(np.dot(w, parts))
    out, res = _finish(parts, w, None, gen)
    return out, PfStepInfo(est, degen, res)


def _step_apf(ps, y, t, model, gen):
    # auxiliary point = assumed transition mean
    mu = np.asarray(model.transition(ps.particles, t, None), dtype=float)
    mu_ll = _loglik(model, y, t, mu)
    with np.errstate(divide="ignore"):
        aux, first_degen = _normalize_log(np.log(ps.weights) + mu_ll)
    if first_degen:
        aux = ps.weights / ps.weights.sum()
    idx = systematic_resample_indices(aux, gen)
    parts = _propagate(model, ps.particles[idx], t, gen)
    logw = _loglik(model, y, t, parts)
    if not first_degen:
        logw = logw - mu_ll[idx]
    w, degen = _normalize_log(logw)
    est = float(np.dot(w, parts))
    out, res = _finish(parts, w, None, gen)
    return out, PfStepInfo(est, degen or first_degen, res)


def _step_gpf(ps, y, t, model, gen):
    n = ps.count
    w0 = ps.weights / ps.weights.sum()
    m0 = float(np.dot(w0, ps.particles))
    v0 = max(float(np.dot(w0, (ps.particles - m0) ** 2)), 1e-12)
    draws = gen.normal(m0, math.sqrt(v0), n)
    parts = _propagate(model, draws, t, gen)
    w, degen = _normalize_log(_loglik(model, y, t, parts))
    est = float(np.dot(w, parts))
    # the Gaussian refit happens implicitly at the next step's moment fit
    return ParticleSet(parts, w), PfStepInfo(est, degen, False)


def _gaussian_subfilter(ps, y, t, model, gen, kind):
    """Per-particle EKF/UKF posterior used as the proposal density."""
    x, p = ps.particles, ps.covs
    q, r = model.process_var, model.obs_var
    if kind == "ekf":
        F = np.asarray(model.transition_jac(x, t), dtype=float)
        mp = np.asarray(model.transition(x, t, None), dtype=float)
        pp = F * F * p + q
        H = np.asarray(model.observe_jac(mp, t), dtype=float)
        yp = np.asarray(model.observe(mp, t, None), dtype=float)
        s = H * H * pp + r
        k = pp * H / s
        mu = mp + k * (y - yp)
        pu = np.maximum((1.0 - k * H) * pp, 1e-12)
        return mu, pu
    # augmented-form UT, vectorized over particles: 7 sigma points each
    xs, us, vs, wm, wc = _augmented_sigma(x, p, q, r, UnscentedParams())
    fx = np.asarray(model.transition(xs, t, None), dtype=float) + us
    mp = fx @ wm
    pp = ((fx - mp[:, None]) ** 2) @ wc
    hy = np.asarray(model.observe(fx, t, None), dtype=float) + vs
    my = hy @ wm
    dy = hy - my[:, None]
    s = (dy**2) @ wc
    cxy = ((fx - mp[:, None]) * dy) @ wc
    k = cxy / s
    mu = mp + k * (y - my)
    pu = np.maximum(pp - k * s * k, 1e-12)
    return mu, pu


def _step_kpf(ps, y, t, model, gen, kind):
    mu, pu = _gaussian_subfilter(ps, y, t, model, gen, kind)
    parts = gen.normal(mu, np.sqrt(pu))
    prior_mean = np.asarray(model.transition(ps.particles, t, None), dtype=float)
    with np.errstate(divide="ignore"):
        logw = (
            np.log(ps.weights)
            + _loglik(model, y, t, parts)
            + _norm_logpdf(parts, prior_mean, model.process_var)
            - _norm_logpdf(parts, mu, pu)
        )
    w, degen = _normalize_log(logw)
    est = float(np.dot(w, parts))
    out, res = _finish(parts, w, pu, gen)
    return out, PfStepInfo(est, degen, res)


def pf_step(
    ps: ParticleSet,
    y: float,
    t: int,
    model: StateSpaceModel,
    variant: str = "sir",
    rng=None,
) -> tuple[ParticleSet, PfStepInfo]:
    """One particle-filter update; returns the new set and step diagnostics."""
    if variant not in PF_VARIANTS:
        raise ValueError(f"unknown particle filter variant {variant!r}")
    gen = as_generator(rng)
    if variant == "sir":
        return _step_sir(ps, y, t, model, gen)
    if variant == "apf":
        return _step_apf(ps, y, t, model, gen)
    if variant == "gpf":
        return _step_gpf(ps, y, t, model, gen)
    return _step_kpf(ps, y, t, model, gen, "ekf" if variant == "ekpf" else "ukf")
