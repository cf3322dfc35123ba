"""Filter-free multi-sensor clutter rejection by cross-sensor clustering.

All sensor observations are first mapped into position space.  Points
from *different* sensors closer than a threshold d = l * sigma_v are
connected (sigma_v is the observation noise mapped to position, which for
range-bearing sensors grows with range, so the threshold adapts).  A
point whose neighborhood spans more distinct sensors than the per-target
detection budget p = 0.8 * sum_s pD_s(centroid) seeds a cluster:

* cluster size within (p, 2p]  -> one target, one fused estimate;
* cluster size in (k*p, (k+1)*p], k >= 2 -> several close targets; the
  cluster is split into k+1 proximity groups holding at most one point
  per sensor, one estimate each.

Requiring the sensor span (rather than the raw point count) to clear p
is what kills clutter: a real target contributes at most one point per
sensor, so its cluster spans almost all sensors, while accidental clutter
clumps repeat sensors and almost never span enough of them.  Isolated
points fall below the seed bar and are discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ClusterParams:
    """Thresholds for the cross-sensor clustering.

    ``sigma_v`` is a scalar or a per-point callable giving the mapped
    observation-noise std; ``detect_sum`` gives sum_s pD_s at a position
    (defaults to n_sensors * 0.95 when omitted).
    """

    n_sensors: int
    scale: float = 3.0              # l in d = l * sigma_v
    sigma_v: float | Callable = 5.0
    p_scale: float = 0.8
    detect_sum: Callable | None = None

    def __post_init__(self):
        if not (1.0 <= self.scale <= 4.0):
            raise ValueError("threshold scale l must be in [1, 4]")
        if self.n_sensors < 2:
            raise ValueError("the cluster filter needs at least two sensors")

    def point_sigma(self, pts: np.ndarray) -> np.ndarray:
        if callable(self.sigma_v):
            return np.asarray(self.sigma_v(pts), dtype=float)
        return np.full(len(pts), float(self.sigma_v))

    def p_threshold(self, centroid: np.ndarray) -> float:
        if self.detect_sum is not None:
            return self.p_scale * float(self.detect_sum(centroid))
        return self.p_scale * self.n_sensors * 0.95


def _constrained_groups(pts: np.ndarray, sensors: np.ndarray, n_groups: int) -> list[np.ndarray]:
    """Agglomerate points into n_groups, one point per sensor per group."""
    clusters = [{"idx": [i], "sensors": {int(sensors[i])}} for i in range(len(pts))]
    centroids = [pts[i].copy() for i in range(len(pts))]
    while len(clusters) > n_groups:
        best = None
        best_d = math.inf
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                if clusters[a]["sensors"] & clusters[b]["sensors"]:
                    continue
                d = float(np.hypot(*(centroids[a] - centroids[b])))
                if d < best_d:
                    best_d, best = d, (a, b)
        if best is None:
            break  # remaining merges all violate the one-per-sensor rule
        a, b = best
        clusters[a]["idx"].extend(clusters[b]["idx"])
        clusters[a]["sensors"] |= clusters[b]["sensors"]
        centroids[a] = pts[clusters[a]["idx"]].mean(axis=0)
        del clusters[b], centroids[b]
    order = np.argsort([-len(c["idx"]) for c in clusters])
    return [np.asarray(clusters[i]["idx"], dtype=int) for i in order[:n_groups]]


def cluster_clutter_filter(point_sets: list, params: ClusterParams) -> np.ndarray:
    """Extract target position estimates from per-sensor mapped point sets.

    ``point_sets`` holds one (m_s, 2) array per sensor (already inverted
    into position space).  Returns a (k, 2) array of estimates.
    """
    if len(point_sets) < 2:
        raise ValueError("need point sets from at least two sensors")
    pts_list, sens_list = [], []
    for s, arr in enumerate(point_sets):
        arr = np.asarray(arr, dtype=float).reshape(-1, 2)
        if len(arr):
            pts_list.append(arr)
            sens_list.append(np.full(len(arr), s, dtype=int))
    if not pts_list:
        return np.empty((0, 2))
    pts = np.vstack(pts_list)
    sens = np.concatenate(sens_list)
    n = len(pts)
    sig = params.point_sigma(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    thresh = params.scale * np.maximum(sig[:, None], sig[None, :])
    adj = (dist < thresh) & (sens[:, None] != sens[None, :])
    np.fill_diagonal(adj, False)

    active = np.ones(n, dtype=bool)
    estimates = []
    while True:
        counts = (adj & active[None, :]).sum(axis=1)
        counts[~active] = 0
        best_seed = -1
        best_span = -1.0
        best_members = None
        best_p = 0.0
        # candidate seeds, strongest neighborhoods first
        for q in np.argsort(-counts):
            if not active[q] or counts[q] == 0:
                break
            members = np.flatnonzero(adj[q] & active)
            members = np.append(members, q)
            span = len(set(sens[members].tolist()))
            centroid = pts[members].mean(axis=0)
            p_i = params.p_threshold(centroid)
            if span > p_i and span > best_span:
                best_seed, best_span, best_members, best_p = q, span, members, p_i
        if best_seed < 0:
            break
        size = len(best_members)
        k = int(size // best_p)
        if k <= 1:
            estimates.append(pts[best_members].mean(axis=0))
        else:
            groups = _constrained_groups(pts[best_members], sens[best_members], k + 1)
            for g in groups:
                estimates.append(pts[best_members][g].mean(axis=0))
        active[best_members] = False
    return np.vstack(estimates) if estimates else np.empty((0, 2))
