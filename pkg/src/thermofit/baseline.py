"""Thermal-field substitutes used by the comparison scenarios: a constant
field and k-nearest-neighbor inverse-distance interpolation from the
temperature sensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class InterpolationConfig:
    k: int = 3
    tie_epsilon: float = 1e-9   # m; closer than this counts as "at a sensor"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("neighbor count k must be >= 1")


def constant_field(value: float, n_nodes: int) -> np.ndarray:
    """Uniform nodal field."""
    return np.full(n_nodes, float(value))


def knn_interpolate(
    sensor_points: np.ndarray,
    sensor_values: np.ndarray,
    query_points: np.ndarray,
    config: InterpolationConfig = InterpolationConfig(),
) -> np.ndarray:
    """Inverse-distance weighting over the k nearest sensors per query.

    A query within ``tie_epsilon`` of a sensor returns that sensor's value
    exactly. Distance ties at the k-th neighbor are broken by sensor index
    so results are deterministic.
    """
    pts = np.asarray(sensor_points, dtype=float).reshape(-1, 2)
    vals = np.asarray(sensor_values, dtype=float).ravel()
    queries = np.atleast_2d(np.asarray(query_points, dtype=float))
    if len(pts) != len(vals):
        raise ValueError("sensor points and values disagree in length")
    if len(pts) < config.k:
        raise ValueError(
            f"need at least k={config.k} sensors, have {len(pts)}"
        )

    out = np.empty(len(queries))
    order_tiebreak = np.arange(len(pts))
    for qi, q in enumerate(queries):
        d = np.linalg.norm(pts - q, axis=1)
        order = np.lexsort((order_tiebreak, d))[: config.k]
        dk = d[order]
        if dk[0] < config.tie_epsilon:
            out[qi] = vals[order[0]]
            continue
        w = 1.0 / dk
        out[qi] = float(np.dot(w, vals[order]) / w.sum())
    return out
