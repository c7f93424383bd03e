"""Control-to-physical field mapping: vertex-morphing style convolution
filtering combined with a sigmoid projection onto the physical bounds.

The filter is a row-stochastic sparse kernel with compact support (linear
hat weights within a radius) over the field sites: element centroids for the
stiffness field, nodes for the temperature field. Forward filtering maps
control values to smoothed values; backward filtering is the exact transpose
and maps physical-space gradients to control-space gradients.

Because every physical value passes through the sigmoid, bound violations
are structurally impossible; no projection or clipping is needed anywhere in
the optimization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree
from scipy.special import expit

SIGMOID_CLAMP = 1e-9


class FilterError(Exception):
    """Kernel construction or chain configuration failure."""


@dataclass(frozen=True)
class FilterOperator:
    """Row-stochastic smoothing kernel over a fixed set of sites."""

    matrix: sp.csr_matrix
    radius: float
    kernel: str = "linear"

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]


def build_kernel(sites: np.ndarray, radius: float) -> FilterOperator:
    """Linear-hat kernel: A_pq proportional to max(0, 1 - d_pq / radius),
    rows normalized to sum one. Entries exist only within the radius; the
    self-weight keeps every row non-empty."""
    if radius <= 0:
        raise FilterError(f"filter radius must be positive, got {radius}")
    sites = np.asarray(sites, dtype=float)
    n = len(sites)
    tree = cKDTree(sites)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    # strict support: hat weight at d == radius is zero anyway
    rows = np.concatenate([np.arange(n), pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([np.arange(n), pairs[:, 1], pairs[:, 0]])
    d = np.linalg.norm(sites[rows] - sites[cols], axis=1)
    w = np.maximum(0.0, 1.0 - d / radius)
    keep = w > 0.0
    A = sp.coo_matrix((w[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    row_sums = np.asarray(A.sum(axis=1)).ravel()
    inv = sp.diags(1.0 / row_sums)
    return FilterOperator(matrix=(inv @ A).tocsr(), radius=float(radius))


def forward(op: FilterOperator, control: np.ndarray) -> np.ndarray:
    """Smoothed field A @ control."""
    return op.matrix @ control


def backward(op: FilterOperator, physical_grad: np.ndarray) -> np.ndarray:
    """Transpose action A^T @ b, mapping field gradients to control space."""
    return op.matrix.T @ physical_grad


def invert_initial(value: float, lo: float, hi: float) -> float:
    """Control scalar whose sigmoid image is ``value`` within [lo, hi].

    The sigmoid argument is clamped to [1e-9, 1 - 1e-9] so values at (or
    beyond) the bounds produce a finite control.
    """
    if hi <= lo:
        raise FilterError(f"invalid bounds [{lo}, {hi}]")
    frac = np.clip((value - lo) / (hi - lo), SIGMOID_CLAMP, 1.0 - SIGMOID_CLAMP)
    return float(np.log(frac / (1.0 - frac)))


@dataclass(frozen=True)
class FieldChain:
    """Maps an unbounded control field to a bounded physical field.

    Default order ("sigmoid_then_vm"): squash each control value to [0, 1]
    first, then smooth the bounded field; unsensed regions stay tethered to
    the averaged bounded values, which keeps the identified fields physical.
    The alternative ("vm_then_sigmoid") filters the raw control values and
    squashes afterwards. Row-stochasticity keeps the result inside the
    bounds either way.
    """

    op: FilterOperator
    lo: float
    hi: float
    order: str = "sigmoid_then_vm"

    def __post_init__(self):
        if self.hi <= self.lo:
            raise FilterError(f"invalid bounds [{self.lo}, {self.hi}]")
        if self.order not in ("vm_then_sigmoid", "sigmoid_then_vm"):
            raise FilterError(f"unknown chain order '{self.order}'")

    def to_physical(self, control: np.ndarray) -> np.ndarray:
        span = self.hi - self.lo
        if self.order == "vm_then_sigmoid":
            return self.lo + span * expit(forward(self.op, control))
        return self.lo + span * forward(self.op, expit(control))

    def gradient(self, control: np.ndarray, d_physical: np.ndarray) -> np.ndarray:
        """Chain rule: dJ/dcontrol from dJ/dphysical at the given control."""
        span = self.hi - self.lo
        if self.order == "vm_then_sigmoid":
            z = expit(forward(self.op, control))
            return backward(self.op, span * z * (1.0 - z) * d_physical)
        z = expit(control)
        return z * (1.0 - z) * backward(self.op, span * d_physical)

    def uniform_control(self, value: float) -> float:
        """Control level producing a uniform physical field at ``value``
        (rows sum to one, so a constant control passes through the filter)."""
        return invert_initial(value, self.lo, self.hi)


@dataclass
class ControlState:
    """Unbounded control fields for the two identifiable physical fields."""

    s_e: np.ndarray
    s_t: np.ndarray

    def copy(self) -> "ControlState":
        return ControlState(self.s_e.copy(), self.s_t.copy())


def to_physical(
    state: ControlState, chain_e: FieldChain, chain_t: FieldChain
) -> tuple[np.ndarray, np.ndarray]:
    """Physical (youngs, delta_t) fields of a control state."""
    return chain_e.to_physical(state.s_e), chain_t.to_physical(state.s_t)


def chain_gradient(
    state: ControlState,
    chain_e: FieldChain,
    chain_t: FieldChain,
    d_youngs: np.ndarray,
    d_delta_t: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Control-space gradients from physical-space gradients."""
    return (
        chain_e.gradient(state.s_e, d_youngs),
        chain_t.gradient(state.s_t, d_delta_t),
    )
