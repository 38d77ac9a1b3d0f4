"""Euclidean projection onto the scaled simplex {u >= 0, sum(u) = budget}.

Each time slot's bandwidth vector is projected independently; the matrix
form just applies the column projection slot by slot.  The projection is
the classic sort-and-threshold construction: sort the point, find the
largest prefix whose running mean stays below the sorted values, shift by
that prefix's mean excess and clip at zero.
"""

from __future__ import annotations

import numpy as np

from .model import DomainError


def _validate(x: np.ndarray, budget: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("projection input must be finite")
    if not budget > 0:
        raise DomainError(f"budget must be positive, got {budget}")
    return x


def projection_threshold(x: np.ndarray, budget: float) -> tuple[float, int]:
    """Return ``(theta, delta)``: the clip shift and active prefix length.

    ``delta`` is the largest m such that (sum of the m largest entries -
    budget) / m is still below the m-th largest entry; ``theta`` is that
    prefix's mean excess.  The projection is ``max(x - theta, 0)``.
    """
    x = _validate(x, budget)
    z = np.sort(x)[::-1]
    csum = np.cumsum(z)
    m = np.arange(1, x.size + 1)
    holds = (csum - budget) / m < z
    delta = int(np.nonzero(holds)[0][-1]) + 1  # m=1 always holds since budget > 0
    theta = float((csum[delta - 1] - budget) / delta)
    return theta, delta


def project_column(x: np.ndarray, budget: float) -> np.ndarray:
    """Project one K-vector onto {u >= 0, sum(u) = budget}."""
    theta, _ = projection_threshold(x, budget)
    return np.maximum(np.asarray(x, dtype=float) - theta, 0.0)


def project_matrix(X: np.ndarray, budget: float) -> np.ndarray:
    """Project every column of a K x N matrix onto the budget simplex."""
    X = _validate(X, budget)
    if X.ndim != 2:
        raise DomainError(f"expected a K x N matrix, got shape {X.shape}")
    K = X.shape[0]
    if K == 1:
        return np.full_like(X, budget)
    if K == 2:
        # Closed form: the free solution shifts both entries by the mean
        # excess; clipping one entry pins the other at the full budget.
        u0 = np.clip(0.5 * (X[0] - X[1] + budget), 0.0, budget)
        return np.stack([u0, budget - u0])
    z = np.sort(X, axis=0)[::-1]
    csum = np.cumsum(z, axis=0)
    m = np.arange(1, K + 1)[:, None]
    holds = (csum - budget) / m < z
    delta = K - np.argmax(holds[::-1], axis=0)  # last m where the bound holds
    prefix = np.take_along_axis(csum, delta[None, :] - 1, axis=0)[0]
    theta = (prefix - budget) / delta
    return np.maximum(X - theta, 0.0)


def qp_projection_oracle(x: np.ndarray, budget: float) -> np.ndarray:
    """Exact projection by enumerating active sets (test oracle, K <= 12).

    For every candidate set of coordinates pinned at zero, the remaining
    equality-constrained least squares has the closed form ``x_F - mean
    excess``; the feasible candidate closest to ``x`` is the projection.
    """
    x = _validate(x, budget)
    K = x.size
    if K > 12:
        raise ValueError(f"active-set enumeration refused for K={K} > 12")
    best_u = None
    best_dist = np.inf
    for mask in range(1, 2**K):
        free = np.array([(mask >> i) & 1 == 1 for i in range(K)])
        shift = (x[free].sum() - budget) / free.sum()
        candidate = x[free] - shift
        if np.any(candidate < 0):
            continue
        u = np.zeros(K)
        u[free] = candidate
        dist = float(np.sum((u - x) ** 2))
        if dist < best_dist:
            best_dist = dist
            best_u = u
    return best_u
