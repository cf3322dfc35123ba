"""Shared primitives: reproducible RNG streams, Gaussian/Gamma sampling,
scalar covariance-weighted fusion, and RMSE error metrics.

Everything here is pure given an RngStream; distinct stream ids give
statistically independent sequences (Philox counter-based generator), so
Monte Carlo runs can fan out in parallel without sharing state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DIM = 8  # dense-matrix helpers are only meant for small state spaces

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv1a(data: bytes, h: int = _FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class RngStream:
    """A named, replayable random stream.

    The same (seed, stream) pair always yields the identical sample
    sequence; different stream ids are independent.  ``child`` derives a
    new stream id from string/int labels, which is how per-run and
    per-estimator streams are split off one experiment seed.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=[self.seed & _MASK64, self.stream & _MASK64])
        )

    def child(self, *labels) -> "RngStream":
        h = _fnv1a(str(self.stream).encode())
        for lab in labels:
            h = _fnv1a(str(lab).encode() + b"/", h)
        return RngStream(self.seed, h)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream or a live Generator; return a Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


class FusionError(ValueError):
    """Raised when two beliefs cannot be consistently fused."""


def _as_square(cov) -> np.ndarray:
    c = np.atleast_2d(np.asarray(cov, dtype=float))
    if c.shape[0] != c.shape[1]:
        raise ValueError(f"covariance must be square, got shape {c.shape}")
    return c


@dataclass
class GaussianBelief:
    """Mean vector and covariance matrix; the unit of Kalman-style fusion."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = _as_square(self.cov)
        n = self.mean.shape[0]
        if self.cov.shape != (n, n):
            raise ValueError("mean/cov dimensions disagree")
        if n > MAX_DIM:
            raise ValueError(f"dimension {n} exceeds supported maximum {MAX_DIM}")
        scale = max(1.0, float(np.abs(self.cov).max()))
        if np.abs(self.cov - self.cov.T).max() > 1e-9 * scale:
            raise ValueError("covariance is not symmetric")
        w = np.linalg.eigvalsh(0.5 * (self.cov + self.cov.T))
        if w.min() < -1e-9 * max(1.0, abs(np.trace(self.cov))):
            raise ValueError("covariance is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def safe_cholesky(cov: np.ndarray) -> np.ndarray:
    """Cholesky factor with a symmetric-eigenvalue fallback for
    semidefinite matrices.  Returns L with L @ L.T == cov (up to the
    clipped negative eigenvalues)."""
    cov = _as_square(cov)
    if cov.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {cov.shape[0]} exceeds supported maximum {MAX_DIM}")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (cov + cov.T))
        if w.min() < -1e-9 * max(1.0, abs(np.trace(cov))):
            raise ValueError("covariance is not positive semidefinite")
        return v * np.sqrt(np.clip(w, 0.0, None))


def gaussian_sample(belief: GaussianBelief, rng, size: int | None = None) -> np.ndarray:
    """Draw from N(mean, cov).  ``size=None`` gives one (n,) sample,
    otherwise shape (size, n)."""
    gen = as_generator(rng)
    L = safe_cholesky(belief.cov)
    n = belief.dim
    if size is None:
        return belief.mean + L @ gen.standard_normal(n)
    z = gen.standard_normal((size, n))
    return belief.mean + z @ L.T


@dataclass(frozen=True)
class GammaSpec:
    """Gamma(shape, rate): mean = shape/rate, variance = shape/rate**2."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("Gamma shape and rate must be positive")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2


def gamma_sample(spec: GammaSpec, rng, size: int | None = None):
    gen = as_generator(rng)
    return gen.gamma(spec.shape, scale=1.0 / spec.rate, size=size)


def fuse_scalar(mx: float, vx: float, my: float, vy: float) -> tuple[float, float]:
    """Covariance-weighted fusion of two scalar Gaussians."""
    if vx < 0 or vy < 0:
        raise FusionError("variances must be non-negative")
    if vx == 0.0 and vy == 0.0:
        if mx != my:
            raise FusionError("two exact beliefs with unequal means cannot be fused")
        return mx, 0.0
    s = vx + vy
    return (vx * my + vy * mx) / s, vx * vy / s


def kf_fuse(a: GaussianBelief, b: GaussianBelief) -> GaussianBelief:
    """Fuse two 1-D Gaussian beliefs by the Kalman rule.

    The result mean lies between the input means and the result variance
    never exceeds the smaller input variance.
    """
    if a.dim != 1 or b.dim != 1:
        raise ValueError("kf_fuse is defined for 1-D beliefs")
    m, v = fuse_scalar(a.mean[0], a.cov[0, 0], b.mean[0], b.cov[0, 0])
    return GaussianBelief(np.array([m]), np.array([[v]]))


def rmse(truth, estimates, mode: str = "signed") -> np.ndarray:
    """Per-step RMSE over Monte Carlo runs.

    ``truth`` and ``estimates`` are (runs, steps) arrays.  ``signed`` is
    the usual sqrt(mean((x - xhat)^2)); ``absolute`` squares the gap of
    magnitudes (|x| - |xhat|) instead, so sign mistakes do not count.
    """
    t = np.asarray(truth, dtype=float)
    e = np.asarray(estimates, dtype=float)
    if t.shape != e.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {e.shape}")
    if t.ndim != 2 or t.shape[0] < 1:
        raise ValueError("expected (runs, steps) arrays with at least one run")
    if mode == "signed":
        err = t - e
    elif mode == "absolute":
        err = np.abs(t) - np.abs(e)
    else:
        raise ValueError(f"unknown rmse mode {mode!r}")
    return np.sqrt(np.mean(err**2, axis=0))
