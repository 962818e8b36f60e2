"""Tuple distance functions: cosine (default), euclidean, manhattan.

Cosine distance is the pipeline default and matches the distance used when
training tuple embedding models. Identical vectors are distance 0 exactly.
"""

from __future__ import annotations

import numpy as np


class ZeroVectorError(ValueError):
    """Cosine distance is undefined for zero vectors; silently defaulting would mask provider bugs."""


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]. Exact 0 for identical vectors; errors on zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine distance undefined for zero vector")
    if np.array_equal(u, v):
        return 0.0
    d = 1.0 - float(np.dot(u, v)) / (nu * nv)
    return min(max(d, 0.0), 2.0)


def _check_nonzero_rows(x: np.ndarray, what: str) -> None:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmin(norms))
        raise ZeroVectorError(f"{what}: zero vector at row {bad}")


def pairwise_cosine(x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """Dense cosine-distance matrix between rows of x and y (y defaults to x).

    Bitwise-identical rows get distance exactly 0, matching the scalar path.
    """
    x = np.asarray(x, dtype=np.float64)
    y = x if y is None else np.asarray(y, dtype=np.float64)
    _check_nonzero_rows(x, "pairwise_cosine x")
    if y is not x:
        _check_nonzero_rows(y, "pairwise_cosine y")
    xn = x / np.linalg.norm(x, axis=1, keepdims=True)
    yn = xn if y is x else y / np.linalg.norm(y, axis=1, keepdims=True)
    d = 1.0 - xn @ yn.T
    np.clip(d, 0.0, 2.0, out=d)
    if y is x:
        np.fill_diagonal(d, 0.0)
    x_groups: dict[bytes, list[int]] = {}
    for i in range(len(x)):
        x_groups.setdefault(x[i].tobytes(), []).append(i)
    rows_y = x_groups if y is x else None
    if rows_y is None:
        for j in range(len(y)):
            hit = x_groups.get(y[j].tobytes())
            if hit is not None:
                d[hit, j] = 0.0
    else:
        for idx in x_groups.values():
            if len(idx) > 1:
                d[np.ix_(idx, idx)] = 0.0
    return d


def pairwise_euclidean(x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = x if y is None else np.asarray(y, dtype=np.float64)
    sq = np.sum(x**2, axis=1)[:, None] + np.sum(y**2, axis=1)[None, :] - 2.0 * (x @ y.T)
    np.clip(sq, 0.0, None, out=sq)
    d = np.sqrt(sq)
    if y is x:
        np.fill_diagonal(d, 0.0)
    return d


def pairwise_manhattan(x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = x if y is None else np.asarray(y, dtype=np.float64)
    return np.abs(x[:, None, :] - y[None, :, :]).sum(axis=2)


_METRICS = {
    "cosine": pairwise_cosine,
    "euclidean": pairwise_euclidean,
    "manhattan": pairwise_manhattan,
}


def pairwise_distances(x: np.ndarray, y: np.ndarray | None = None, metric: str = "cosine") -> np.ndarray:
    """Distance matrix under a named metric; cosine is the default throughout."""
    try:
        fn = _METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown distance metric {metric!r}; choose from {sorted(_METRICS)}") from None
    return fn(x, y)


def available_metrics() -> list[str]:
    return sorted(_METRICS)
