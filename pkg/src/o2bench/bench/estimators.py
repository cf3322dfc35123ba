"""Estimator runners for the scalar benchmark models.

Every estimator in a run consumes the identical observation sequence and
starts from the same unbiased initial state (the comparison protocol:
fairness over realism).  Wall time is measured around the estimator loop
only, excluding simulation and I/O.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..core import GaussianBelief, RngStream
from ..filters import ekf_step, init_particles, kalman_step, pf_step, ukf_step
from ..models import StateSpaceModel
from ..o2 import DebiasSpec, SignStrategy, o2_run

GAUSSIAN_NAMES = ("kf", "ekf", "ukf")
PF_NAMES = ("sir", "apf", "gpf", "ekpf", "ukpf")
O2_NAMES = ("o2", "o2-pf-sign", "o2-true-sign", "o2-unbiased")

# predicted-variance bound for the EKF on strongly nonlinear models
# (10x the process variance ~ the state's own prior spread)
EKF_COV_CAP_FACTOR = 10.0


@dataclass
class EstimatorRun:
    estimates: np.ndarray
    wall_s: float
    degeneracy: int = 0


def run_estimator(
    name: str,
    model: StateSpaceModel,
    ys: np.ndarray,
    truth: np.ndarray,
    rng: RngStream,
    particles: int = 100,
    debias_samples: int = 100,
) -> EstimatorRun:
    """One estimator over one run's observations."""
    steps = len(ys)
    x1 = float(truth[0])
    t0 = time.perf_counter()
    if name in GAUSSIAN_NAMES:
        est = np.empty(steps)
        est[0] = x1
        belief = GaussianBelief([x1], [[model.init_var]])
        cap = EKF_COV_CAP_FACTOR * model.process_var
        for t in range(2, steps + 1):
            if name == "kf":
                belief = kalman_step(belief, ys[t - 1], t, model)
            elif name == "ekf":
                belief = ekf_step(belief, ys[t - 1], t, model, cov_cap=cap)
            else:
                belief = ukf_step(belief, ys[t - 1], t, model)
            est[t - 1] = belief.mean[0]
        return EstimatorRun(est, time.perf_counter() - t0)
    if name in PF_NAMES:
        gen = rng.generator()
        ps = init_particles(model, x1, particles, gen, name)
        est = np.empty(steps)
        est[0] = x1
        degen = 0
        for t in range(2, steps + 1):
            ps, info = pf_step(ps, ys[t - 1], t, model, name, gen)
            est[t - 1] = info.estimate
            degen += info.degeneracy
        return EstimatorRun(est, time.perf_counter() - t0, degen)
    if name in O2_NAMES:
        sign = {
            "o2": SignStrategy.TRANSITION,
            "o2-pf-sign": SignStrategy.FILTER,
            "o2-true-sign": SignStrategy.ORACLE,
            "o2-unbiased": SignStrategy.ORACLE,
        }[name]
        debias = DebiasSpec(debias_samples) if name == "o2-unbiased" else None
        res = o2_run(
            model,
            ys,
            sign,
            rng,
            truth=truth if sign is SignStrategy.ORACLE else None,
            debias=debias,
            filter_particles=particles,
            x0=x1,
            first_from_observation=False,
        )
        return EstimatorRun(res.estimates, time.perf_counter() - t0, res.failures)
    raise ValueError(f"unknown estimator {name!r}")
