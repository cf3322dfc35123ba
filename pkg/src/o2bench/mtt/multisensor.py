"""Multi-sensor tracking strategies.

* ``t2t``  -- one SMC-PHD filter per sensor; per step the estimate sets
  are associated across filters and averaged, and surplus estimates from
  filters whose cardinality exceeds the cross-filter average are dropped.
* ``oft``  -- a single SMC-PHD filter on a synthetic "super" sensor whose
  observation noise is the N-sensor fusion equivalent R/N.
* ``o2``   -- the filter-free route: per scan, map all observations into
  position space and run the cross-sensor clutter filter.  No dynamic
  model is used at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import as_generator
from .clutterfilter import ClusterParams, cluster_clutter_filter
from .ct import SensorModel
from .phd import PhdConfig, SmcPhd, extract_estimates
from .scenario import BirthModel, Scenario


def o2_cluster_params(sensors: list, scale: float | None = None) -> ClusterParams:
    """Cluster-filter thresholds implied by a homogeneous sensor bank.

    sigma_v is the largest observation noise mapped into position space
    (for range-bearing sensors the cross-range component at the region
    edge dominates).  The confidence scale defaults per sensor geometry:
    d = 2 sigma_v already spans the typical same-target pair distance at
    mid ranges, while the isotropic direct-position case needs d = 4
    sigma_v for the same capture probability.
    """
    s0 = sensors[0]
    n = len(sensors)
    if s0.kind == "range-bearing":
        # mapped noise varies strongly with range; a per-point threshold keeps
        # the connection radius tight where clutter piles up near the origin
        def sigma_v(pts):
            return s0.mapped_position_std(pts)

        if scale is None:
            scale = 2.25
    else:
        sigma_v = s0.sigma_xy
        if scale is None:
            scale = 3.5

    def detect_sum(centroid):
        state = np.array([centroid[0], 0.0, centroid[1], 0.0, 0.0])
        return float(sum(s.pd(state[None, :])[0] for s in sensors))

    return ClusterParams(n_sensors=n, scale=scale, sigma_v=sigma_v, detect_sum=detect_sum)


def run_o2_tracker(scenario: Scenario, sensor_indices: list[int],
                   params: ClusterParams | None = None) -> list[np.ndarray]:
    """Per-step estimate sets from the multi-sensor clutter filter."""
    sensors = [scenario.sensors[i] for i in sensor_indices]
    params = params or o2_cluster_params(sensors)
    out = []
    for t in range(scenario.steps):
        mapped = [sensors[k].invert(scenario.scans[t][i]) for k, i in enumerate(sensor_indices)]
        pos = cluster_clutter_filter(mapped, params)
        states = np.zeros((len(pos), 5))
        if len(pos):
            states[:, 0] = pos[:, 0]
            states[:, 2] = pos[:, 1]
        out.append(states)
    return out


def run_phd_tracker(
    scenario: Scenario,
    sensor_index: int,
    extractor: str = "meap",
    config: PhdConfig = PhdConfig(),
    birth: BirthModel | None = None,
    rng=None,
) -> tuple[list, list]:
    """Single-sensor SMC-PHD over the scan sequence.

    Returns (estimates per step, info per step).
    """
    sensor = scenario.sensors[sensor_index]
    phd = SmcPhd(sensor, birth, config, rng)
    estimates, infos = [], []
    prev = None
    for t in range(scenario.steps):
        info = phd.step(scenario.scans[t][sensor_index])
        est = extract_estimates(info, sensor, extractor, phd.gen, prev_estimates=prev)
        estimates.append(est)
        infos.append(info)
        prev = est if len(est) else prev
    return estimates, infos


def _t2t_fuse_step(per_filter: list[np.ndarray], gate: float) -> np.ndarray:
    """Associate estimate sets across filters and average the groups."""
    cards = [len(e) for e in per_filter]
    avg = float(np.mean(cards))
    groups: list[dict] = []
    for f, est in enumerate(per_filter):
        for x in est:
            best, best_d = None, gate
            for g in groups:
                if f in g["filters"]:
                    continue
                d = math.hypot(g["centroid"][0] - x[0], g["centroid"][1] - x[2])
                if d < best_d:
                    best, best_d = g, d
            if best is None:
                groups.append({"members": [x], "filters": {f}, "centroid": (x[0], x[2])})
            else:
                best["members"].append(x)
                best["filters"].add(f)
                mm = np.mean([ (m[0], m[2]) for m in best["members"] ], axis=0)
                best["centroid"] = (mm[0], mm[1])
    fused = []
    for g in groups:
        if len(g["filters"]) >= 2:
            fused.append(np.mean(g["members"], axis=0))
        else:
            f = next(iter(g["filters"]))
            # singleton support: kept only when its filter is not overestimating
            if cards[f] <= avg:
                fused.append(np.mean(g["members"], axis=0))
    return np.vstack(fused) if fused else np.empty((0, 5))


def multisensor_track(
    scenario: Scenario,
    strategy: str,
    sensor_indices: list[int],
    rng,
    extractor: str = "meap",
    config: PhdConfig = PhdConfig(),
    birth: BirthModel | None = None,
    oft_sensor_index: int | None = None,
) -> list[np.ndarray]:
    """Per-step estimate sets under one fusion strategy."""
    if strategy == "o2":
        return run_o2_tracker(scenario, sensor_indices)
    if strategy == "oft":
        idx = oft_sensor_index if oft_sensor_index is not None else sensor_indices[-1]
        est, _ = run_phd_tracker(scenario, idx, extractor, config, birth, rng)
        return est
    if strategy == "t2t":
        per_filter = []
        for j, idx in enumerate(sensor_indices):
            sub = rng.child("t2t", j) if hasattr(rng, "child") else rng
            est, _ = run_phd_tracker(scenario, idx, extractor, config, birth, sub)
            per_filter.append(est)
        if len(sensor_indices) == 1:
            return per_filter[0]
        sensor = scenario.sensors[sensor_indices[0]]
        gate = 3.0 * float(
            np.max(sensor.mapped_position_std(np.array([[0.0, 1500.0], [1500.0, 0.0]])))
        )
        return [
            _t2t_fuse_step([per_filter[f][t] for f in range(len(per_filter))], gate)
            for t in range(scenario.steps)
        ]
    raise ValueError(f"unknown multisensor strategy {strategy!r}")
