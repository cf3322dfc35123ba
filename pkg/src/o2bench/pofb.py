"""Probability of fusion benefit (PoFB).

Monte Carlo estimation of the probability that a fused estimate lands
closer to the true state than a draw from one of the source
distributions.  Fusion follows either the scalar Kalman rule or a
particle reweighting of the prediction by the observation density.  The
sweep grids are parameterized by the variance ratio r, the bias ratio p,
and the true-state offset m (all in units of the observation std).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, as_generator, fuse_scalar
from .filters import ParticleSet, resample

RULES = ("kf", "particle")


@dataclass(frozen=True)
class FusionCase:
    """One fusion setting: observation-inferred p(x), prediction p(y), truth m_T."""

    m_x: float = 0.0
    var_x: float = 1.0
    m_y: float = 0.0
    var_y: float = 1.0
    m_true: float = 0.0
    rule: str = "kf"
    particles: int = 100_000

    def __post_init__(self):
        if self.var_x <= 0 or self.var_y <= 0:
            raise ValueError("variances must be positive")
        if self.rule not in RULES:
            raise ValueError(f"unknown fusion rule {self.rule!r}")

    @classmethod
    def from_ratios(cls, r: float, p: float, m: float = 0.0, rule: str = "kf",
                    particles: int = 100_000) -> "FusionCase":
        """Normalized case: p(x) = N(0, 1), p(y) = N(p, r), m_T = m."""
        return cls(0.0, 1.0, p, r, m, rule, particles)


def particle_fusion(
    prior_particles: np.ndarray,
    likelihood_mean: float,
    likelihood_var: float,
    rng=None,
    resample_after: bool = False,
) -> tuple[ParticleSet, bool]:
    """Reweight equal-weight prediction particles by the observation density.

    Returns (posterior set, underflow flag).  On total weight underflow the
    weights stay uniform and the flag is raised.
    """
    x = np.asarray(prior_particles, dtype=float)
    logw = -0.5 * (x - likelihood_mean) ** 2 / likelihood_var
    m = logw.max()
    if not np.isfinite(m):
        ps = ParticleSet(x, np.full(len(x), 1.0 / len(x)))
        return ps, True
    w = np.exp(logw - m)
    ps = ParticleSet(x, w / w.sum())
    if resample_after:
        if rng is None:
            raise ValueError("resampling needs an rng")
        ps = resample(ps, rng)
    return ps, False


def _draw_fused(case: FusionCase, size: int, gen) -> np.ndarray:
    if case.rule == "kf":
        mz, vz = fuse_scalar(case.m_x, case.var_x, case.m_y, case.var_y)
        return gen.normal(mz, math.sqrt(vz), size)
    prior = gen.normal(case.m_y, math.sqrt(case.var_y), case.particles)
    ps, _ = particle_fusion(prior, case.m_x, case.var_x)
    idx = gen.choice(case.particles, size=size, p=ps.weights)
    return ps.particles[idx]


def pofb_vs_x(case: FusionCase, samples: int, rng) -> float:
    """P(|m_T - x| > |m_T - z|) with x from p(x) and z from the fusion."""
    gen = as_generator(rng)
    x = gen.normal(case.m_x, math.sqrt(case.var_x), samples)
    z = _draw_fused(case, samples, gen)
    return float(np.mean(np.abs(case.m_true - x) > np.abs(case.m_true - z)))


def pofb_vs_y(case: FusionCase, samples: int, rng) -> float:
    """P(|m_T - y| > |m_T - z|) with y from the prediction p(y)."""
    gen = as_generator(rng)
    y = gen.normal(case.m_y, math.sqrt(case.var_y), samples)
    z = _draw_fused(case, samples, gen)
    return float(np.mean(np.abs(case.m_true - y) > np.abs(case.m_true - z)))


def pofb_vs_min(case: FusionCase, samples: int, rng) -> float:
    """P(min(|m_T - x|, |m_T - y|) > |m_T - z|): fusion beats both sources."""
    gen = as_generator(rng)
    x = gen.normal(case.m_x, math.sqrt(case.var_x), samples)
    y = gen.normal(case.m_y, math.sqrt(case.var_y), samples)
    z = _draw_fused(case, samples, gen)
    best = np.minimum(np.abs(case.m_true - x), np.abs(case.m_true - y))
    return float(np.mean(best > np.abs(case.m_true - z)))


_TARGETS = {"x": pofb_vs_x, "y": pofb_vs_y, "min": pofb_vs_min}

DEFAULT_M_VALUES = (-10.0, -5.0, -2.0, -1.0, -0.1, 0.1, 1.0, 2.0, 5.0, 10.0, 30.0)


@dataclass(frozen=True)
class SweepGrid:
    """(r, p, m) grid with per-cell sample counts."""

    r_values: tuple = tuple(np.logspace(-2, 3, 11))
    p_values: tuple = (0.0, 0.4, 1.0, 2.0, 5.0, 10.0)
    m_values: tuple = (0.0,)
    samples: int | None = None      # None -> 1e5 for kf, 1e6 for particle
    particles: int = 100_000

    def cell_samples(self, rule: str) -> int:
        if self.samples is not None:
            return self.samples
        return 100_000 if rule == "kf" else 1_000_000


def pofb_sweep(grid: SweepGrid, which: str = "x", rule: str = "kf", rng=None) -> list[dict]:
    """Evaluate the PoFB over the whole grid.

    Each cell runs on its own child stream, so the sweep is independent of
    evaluation order.  Returns rows of {r, p, m, pofb, stderr}.
    """
    if which not in _TARGETS:
        raise ValueError(f"unknown sweep target {which!r}")
    if rule not in RULES:
        raise ValueError(f"unknown fusion rule {rule!r}")
    if not (grid.r_values and grid.p_values and grid.m_values):
        raise ValueError("empty sweep grid")
    estimator = _TARGETS[which]
    base = rng if rng is not None else RngStream(0)
    if not isinstance(base, RngStream):
        raise TypeError("pofb_sweep needs an RngStream so cells can fork substreams")
    n = grid.cell_samples(rule)
    rows = []
    for r in grid.r_values:
        for p in grid.p_values:
            for m in grid.m_values:
                case = FusionCase.from_ratios(r, p, m, rule, grid.particles)
                cell_rng = base.child("pofb", which, rule, f"{r:.6g}", f"{p:.6g}", f"{m:.6g}")
                val = estimator(case, n, cell_rng)
                rows.append(
                    {
                        "r": r,
                        "p": p,
                        "m": m,
                        "pofb": val,
                        "stderr": math.sqrt(max(val * (1 - val), 1e-12) / n),
                    }
                )
    return rows
