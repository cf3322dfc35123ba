"""Observation-only state inference.

The estimator inverts the observation function directly (no dynamic
model, no Bayesian fusion).  Where the inverse is a sign-ambiguous pair,
a sign strategy resolves it: the one-step transition prediction, an
attached particle filter, the true sign (oracle, for benchmarking), or
none when the state is known non-negative.  When the observation noise
distribution is known, a Monte Carlo debiasing average removes the
nonlinear inversion bias.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import as_generator, fuse_scalar
from .filters import init_particles, pf_step
from .models import StateSpaceModel


class SignStrategy(enum.Enum):
    TRANSITION = "transition"   # sign of f(previous estimate)
    FILTER = "filter"           # sign of an attached particle filter's estimate
    ORACLE = "oracle"           # true sign (benchmark upper bound)
    NONE = "none"               # state known non-negative


@dataclass(frozen=True)
class DebiasSpec:
    """Monte Carlo debiasing: average the inverse over observation-noise draws."""

    samples: int = 100

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("debias sample count must be positive")


class EstimationFailure(Exception):
    """No candidate state for this observation; the caller holds the last estimate."""


def _resolve_sign(sign: SignStrategy, model, t, prev_estimate, true_state, filter_estimate):
    if sign is SignStrategy.NONE:
        return 1.0
    if sign is SignStrategy.ORACLE:
        if true_state is None:
            raise ValueError("oracle sign strategy needs the true state")
        return 1.0 if true_state >= 0 else -1.0
    if sign is SignStrategy.FILTER:
        if filter_estimate is None:
            raise ValueError("filter sign strategy needs the attached filter estimate")
        return 1.0 if filter_estimate >= 0 else -1.0
    if prev_estimate is None:
        raise ValueError("transition sign strategy needs the previous estimate")
    ref = float(model.transition(prev_estimate, t, None))
    return 1.0 if ref >= 0 else -1.0


def o2_estimate(
    model: StateSpaceModel,
    y: float,
    t: int,
    sign: SignStrategy = SignStrategy.TRANSITION,
    prev_estimate: float | None = None,
    true_state: float | None = None,
    filter_estimate: float | None = None,
) -> float:
    """Invert one observation into a single state estimate.

    Sign-symmetric candidate pairs are resolved by the sign strategy; any
    other multi-candidate set falls back to the candidate closest to the
    transition prediction from the previous estimate.
    """
    cands = model.invert(y, t)
    if len(cands) == 0:
        raise EstimationFailure(f"no candidate state for y={y} at t={t}")
    if len(cands) == 1:
        return float(cands[0])
    if len(cands) == 2 and math.isclose(cands[0], -cands[1], rel_tol=0.0, abs_tol=1e-12):
        mag = abs(cands[0])
        return _resolve_sign(sign, model, t, prev_estimate, true_state, filter_estimate) * mag
    if prev_estimate is None:
        raise ValueError("multi-candidate inversion needs the previous estimate")
    ref = float(model.transition(prev_estimate, t, None))
    return float(min(cands, key=lambda c: abs(c - ref)))


def o2_debias(
    model: StateSpaceModel,
    y: float,
    t: int,
    spec: DebiasSpec,
    rng,
    sign: SignStrategy = SignStrategy.NONE,
    prev_estimate: float | None = None,
    true_state: float | None = None,
    filter_estimate: float | None = None,
    invalid: str = "clamp",
) -> tuple[float, bool]:
    """Debiased inversion: mean of h^{-1}(y - v_i) over noise draws.

    Draws outside the inverse's domain (square-root inverse, negative
    radicand) either contribute their clamped-to-zero candidate
    (``invalid="clamp"``, the default, matching the per-candidate clamp of
    the plain inverse) or are dropped from the average
    (``invalid="discard"``).  If every draw is invalid the plain estimate
    is returned with a raised flag.
    """
    if invalid not in ("clamp", "discard"):
        raise ValueError(f"unknown invalid-sample policy {invalid!r}")
    gen = as_generator(rng)
    v = gen.normal(0.0, math.sqrt(model.obs_var), spec.samples)
    values, valid, signed_pair = model.debias_invert(y - v, t)
    if not np.any(valid):
        return (
            o2_estimate(model, y, t, sign, prev_estimate, true_state, filter_estimate),
            True,
        )
    est = float(np.mean(values) if invalid == "clamp" else np.mean(values[valid]))
    if signed_pair:
        est *= _resolve_sign(sign, model, t, prev_estimate, true_state, filter_estimate)
    return est, False


@dataclass
class O2RunResult:
    estimates: np.ndarray
    failures: int = 0
    debias_fallbacks: int = 0


def o2_run(
    model: StateSpaceModel,
    ys: np.ndarray,
    sign: SignStrategy = SignStrategy.TRANSITION,
    rng=None,
    truth: np.ndarray | None = None,
    debias: DebiasSpec | None = None,
    filter_particles: int = 100,
    x0: float | None = None,
    first_from_observation: bool = True,
) -> O2RunResult:
    """Sequential observation-only estimation over a whole run.

    ``truth`` is only consulted by the oracle sign strategy.  The FILTER
    strategy runs a bootstrap particle filter alongside purely to vote on
    the sign.  ``x0`` seeds the transition-prediction sign at t=1 and
    defaults to the model's documented initial guess.  Benchmarks that
    hand every estimator the same unbiased initial state pass
    ``first_from_observation=False`` so the t=1 estimate is x0 itself,
    matching how the filters are initialized.
    """
    ys = np.asarray(ys, dtype=float)
    steps = len(ys)
    gen = as_generator(rng) if (debias is not None or sign is SignStrategy.FILTER) else None
    prev = model.initial_guess if x0 is None else float(x0)
    ps = None
    if sign is SignStrategy.FILTER:
        ps = init_particles(model, prev, filter_particles, gen, "sir")
    out = np.empty(steps)
    failures = 0
    fallbacks = 0
    for i in range(steps):
        t = i + 1
        if t == 1 and not first_from_observation:
            out[0] = prev
            continue
        f_est = None
        if ps is not None:
            if t > 1:
                ps, _ = pf_step(ps, ys[i], t, model, "sir", gen)
            f_est = float(ps.mean())
        x_true = truth[i] if truth is not None else None
        try:
            if debias is not None:
                est, fell_back = o2_debias(
                    model, ys[i], t, debias, gen, sign, prev, x_true, f_est
                )
                fallbacks += fell_back
            else:
                est = o2_estimate(model, ys[i], t, sign, prev, x_true, f_est)
        except EstimationFailure:
            est = prev
            failures += 1
        out[i] = est
        prev = est
    return O2RunResult(out, failures, fallbacks)


def o2_multisensor_fuse(estimates, variances) -> tuple[np.ndarray, float]:
    """Inverse-variance weighted fusion of independent unbiased estimates.

    Estimates may be scalars or equal-length vectors sharing a scalar
    variance each; N estimates of common variance P fuse to variance P/N.
    """
    variances = np.asarray(variances, dtype=float)
    if variances.ndim != 1 or len(variances) < 1:
        raise ValueError("need at least one (estimate, variance) pair")
    if np.any(variances <= 0):
        raise ValueError("variances must be positive")
    est = np.asarray(estimates, dtype=float)
    if est.shape[0] != variances.shape[0]:
        raise ValueError("estimates/variances length mismatch")
    inv = 1.0 / variances
    fused_var = 1.0 / inv.sum()
    fused = np.tensordot(inv / inv.sum(), est, axes=1)
    return fused, float(fused_var)


@dataclass(frozen=True)
class Sensor:
    """One observation equation: y = h(x) + v with noise variance per component."""

    h: callable
    noise_var: float | None = None
    jac: callable | None = None


@dataclass(frozen=True)
class SensorSuite:
    sensors: tuple

    def __post_init__(self):
        if len(self.sensors) < 1:
            raise ValueError("a sensor suite needs at least one sensor")


class UnderDeterminedError(ValueError):
    """Fewer effective observation dimensions than state dimensions."""


def _numeric_jac(h, x, m):
    y0 = np.atleast_1d(np.asarray(h(x), dtype=float))
    J = np.empty((y0.shape[0], m))
    for j in range(m):
        step = 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += step
        J[:, j] = (np.atleast_1d(np.asarray(h(xp), dtype=float)) - y0) / step
    return J


def o2_solve_system(
    suite: SensorSuite,
    observations,
    x0,
    weighted: bool | None = None,
    tol: float = 1e-9,
    max_iter: int = 50,
) -> np.ndarray:
    """Least-squares solution of a stacked noiseless observation system.

    Damped Gauss-Newton on the residuals y_i - h_i(x); residuals are
    weighted by 1/sigma_i when the sensor noises are known (and weighting
    is not disabled), unweighted otherwise.  Raises UnderDeterminedError
    when the stacked system has fewer rows than state dimensions or a
    rank-deficient Jacobian near the solution.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    m = x.shape[0]
    obs = [np.atleast_1d(np.asarray(o, dtype=float)) for o in observations]
    if len(obs) != len(suite.sensors):
        raise ValueError("one observation per sensor required")
    n_rows = sum(o.shape[0] for o in obs)
    if n_rows < m:
        raise UnderDeterminedError(f"{n_rows} observation rows for {m} state dims")
    have_noise = all(s.noise_var is not None for s in suite.sensors)
    use_w = have_noise if weighted is None else (weighted and have_noise)

    def residual(xv):
        rs = []
        for s, o in zip(suite.sensors, obs):
            r = o - np.atleast_1d(np.asarray(s.h(xv), dtype=float))
            if use_w:
                r = r / math.sqrt(s.noise_var)
            rs.append(r)
        return np.concatenate(rs)

    def jacobian(xv):
        Js = []
        for s, o in zip(suite.sensors, obs):
            J = s.jac(xv) if s.jac is not None else _numeric_jac(s.h, xv, m)
            J = np.atleast_2d(np.asarray(J, dtype=float))
            if use_w:
                J = J / math.sqrt(s.noise_var)
            Js.append(J)
        return np.vstack(Js)

    lam = 1e-10
    r = residual(x)
    cost = float(r @ r)
    for _ in range(max_iter):
        J = jacobian(x)
        rank = np.linalg.matrix_rank(J, tol=1e-9 * max(1.0, float(np.abs(J).max())))
        if rank < m:
            raise UnderDeterminedError("rank-deficient observation Jacobian")
        # damped normal equations; the damping backs off on success
        A = J.T @ J + lam * np.eye(m)
        step = np.linalg.solve(A, J.T @ r)
        x_new = x + step
        r_new = residual(x_new)
        cost_new = float(r_new @ r_new)
        if cost_new <= cost:
            x, r, cost = x_new, r_new, cost_new
            lam = max(lam * 0.25, 1e-12)
        else:
            lam *= 10.0
            continue
        if float(np.linalg.norm(step)) < tol:
            break
    return x


def fisher_crb(sigma2: float) -> np.ndarray:
    """Cramer-Rao bound for (state, variance) under a Gaussian estimate:
    diag(sigma^2, 2 sigma^4)."""
    if sigma2 <= 0:
        raise ValueError("variance must be positive")
    return np.diag([sigma2, 2.0 * sigma2**2])
