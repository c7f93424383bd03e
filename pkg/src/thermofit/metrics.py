"""Field-level error metrics against known target distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ErrorReport:
    """Relative discrete L2 errors and their percent changes vs a reference
    state. Stiffness errors live on elements, temperature errors on nodes."""

    eps_e: float
    eps_t: float
    delta_e: float
    delta_t: float


def rel_l2(field: np.ndarray, target: np.ndarray) -> float:
    """sqrt(sum (Q_i - Q_target_i)^2) / sqrt(sum Q_target_i^2)."""
    field = np.asarray(field, dtype=float)
    target = np.asarray(target, dtype=float)
    if field.shape != target.shape:
        raise ValueError(f"shape mismatch {field.shape} vs {target.shape}")
    denom = float(np.linalg.norm(target))
    if denom == 0.0:
        raise ValueError("target field has zero norm")
    return float(np.linalg.norm(field - target)) / denom


def pct_change(eps: float, eps_ref: float) -> float:
    """Percent change of an error vs its reference; negative = improvement."""
    if eps_ref <= 0:
        raise ValueError("reference error must be positive")
    return (eps - eps_ref) / eps_ref * 100.0
