"""Optimal sub-pattern assignment metric between finite state sets."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def ospa(x_set, y_set, c: float = 100.0, p: float = 2.0) -> float:
    """OSPA distance of order p with cutoff c, on position coordinates.

    Inputs are (m, d) and (n, d) arrays (d >= 2; only the first two
    columns are compared when d > 2, matching the position-based scoring
    of the tracking benchmarks).  Empty-vs-empty is 0; empty-vs-nonempty
    is the pure cardinality penalty c.  The pairing term uses an exact
    assignment solve.
    """
    if c <= 0:
        raise ValueError("cutoff c must be positive")
    if p < 1:
        raise ValueError("order p must be >= 1")
    X = np.atleast_2d(np.asarray(x_set, dtype=float)) if np.size(x_set) else np.empty((0, 2))
    Y = np.atleast_2d(np.asarray(y_set, dtype=float)) if np.size(y_set) else np.empty((0, 2))
    if X.shape[0] > Y.shape[0]:
        X, Y = Y, X
    m, n = X.shape[0], Y.shape[0]
    if n == 0:
        return 0.0
    if m == 0:
        return float(c)
    # kinematic states [px, vx, py, vy, ...] reduce to their position columns
    if X.shape[1] >= 4:
        X = X[:, (0, 2)]
    elif X.shape[1] == 3:
        X = X[:, :2]
    if Y.shape[1] >= 4:
        Y = Y[:, (0, 2)]
    elif Y.shape[1] == 3:
        Y = Y[:, :2]
    d = np.sqrt(((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2))
    cost = np.minimum(d, c) ** p
    row, col = linear_sum_assignment(cost)
    total = cost[row, col].sum() + c**p * (n - m)
    return float((total / n) ** (1.0 / p))
