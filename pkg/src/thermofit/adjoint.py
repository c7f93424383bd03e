"""Adjoint-based gradients of the sensor-mismatch cost.

One adjoint solve (reusing the primal factorization, since the stiffness is
symmetric) yields the exact gradient with respect to every elemental Young's
modulus and every nodal temperature at once. A central finite-difference
probe is provided as the independent verification oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fem, sensors as sens

ADJOINT_RTOL = 1e-8


@dataclass
class AdjointSolution:
    """Adjoint variables and the right-hand side -dJ/du they solve."""

    u_tilde: np.ndarray
    rhs: np.ndarray


def cost_u_gradient(
    sensors: sens.SensorSet, meas: sens.Measurements, u_comp: np.ndarray
) -> np.ndarray:
    """dJ/du: the displacement-sensor mismatch scattered through each
    sensor's barycentric interpolation stencil."""
    n_dofs = 2 * sensors.mesh.n_nodes
    djdu = np.zeros(n_dofs)
    if sensors.n_disp == 0:
        return djdu
    omega1 = sensors.response_weights[0]
    mism = np.where(sensors.disp_components, u_comp - meas.u_meas, 0.0)
    coeff = omega1 * sensors.omega_disp * mism          # (m, 2)
    tri_nodes = sensors.mesh.triangles[sensors.disp_triangles]
    for c in (0, 1):
        np.add.at(
            djdu,
            (2 * tri_nodes + c).ravel(),
            (coeff[:, c, None] * sensors.disp_bary).ravel(),
        )
    return djdu


def adjoint_rhs(
    model: fem.Model,
    primal: fem.PrimalSolution,
    sensors: sens.SensorSet,
    meas: sens.Measurements,
) -> np.ndarray:
    """Right-hand side -dJ/du of the adjoint system."""
    u_comp = sens.sample_displacements(sensors, primal.u)
    return -cost_u_gradient(sensors, meas, u_comp)


def solve_adjoint(handle: fem.StiffnessHandle, rhs: np.ndarray) -> AdjointSolution:
    """Solve K^T u_tilde = rhs reusing the primal factorization (K = K^T)."""
    u_tilde = handle.solve(rhs)
    res = np.linalg.norm(handle.matrix @ u_tilde[handle.free] - rhs[handle.free])
    scale = np.linalg.norm(rhs) + 1.0
    if not res <= ADJOINT_RTOL * scale:
        raise fem.FemError(f"adjoint residual {res:.3e} exceeds tolerance")
    return AdjointSolution(u_tilde=u_tilde, rhs=rhs)


def grad_e(
    model: fem.Model,
    primal: fem.PrimalSolution,
    adj: AdjointSolution,
    operator: fem.FemOperator | None = None,
) -> np.ndarray:
    """dJ/dE per element.

    The residual is linear in each E_e, so dR/dE_e is the unit-modulus
    element stiffness acting on u minus the unit-modulus thermal load; the
    cost has no direct E dependence.
    """
    op = operator if operator is not None else fem.FemOperator.from_model(model)
    ue = primal.u[op.elem_dofs]
    ve = adj.u_tilde[op.elem_dofs]
    dt_avg = model.delta_t[model.mesh.triangles].mean(axis=1)
    k_term = np.einsum("mi,mij,mj->m", ve, op.unit_k, ue)
    g_term = dt_avg * np.einsum("mi,mi->m", ve, op.unit_g)
    return k_term - g_term


def grad_t(
    model: fem.Model,
    primal: fem.PrimalSolution,
    adj: AdjointSolution,
    sensors: sens.SensorSet,
    meas: sens.Measurements,
    operator: fem.FemOperator | None = None,
    include_direct: bool = True,
) -> np.ndarray:
    """dJ/dDeltaT per node: the direct temperature-sensor term plus the
    adjoint contraction with dR/dDeltaT = -df_dt/dDeltaT."""
    op = operator if operator is not None else fem.FemOperator.from_model(model)
    grad = np.zeros(model.mesh.n_nodes)

    if include_direct and sensors.n_temp:
        omega2 = sensors.response_weights[1]
        dt_comp = sens.sample_temperatures(sensors, model.delta_t)
        coeff = omega2 * sensors.omega_temp * (dt_comp - meas.dt_meas)
        tri_nodes = model.mesh.triangles[sensors.temp_triangles]
        np.add.at(
            grad, tri_nodes.ravel(), (coeff[:, None] * sensors.temp_bary).ravel()
        )

    # Each corner temperature enters the element thermal load through the
    # element average, hence the 1/3.
    ve = adj.u_tilde[op.elem_dofs]
    per_elem = model.youngs * np.einsum("mi,mi->m", ve, op.unit_g) / 3.0
    contrib = np.repeat(per_elem, 3)
    np.add.at(grad, model.mesh.triangles.ravel(), -contrib)
    return grad


def fd_relative_deviation(
    cost_fn: Callable[[np.ndarray], float],
    gradient: np.ndarray,
    x0: np.ndarray,
    steps: np.ndarray,
    probes: np.ndarray,
) -> float:
    """Max relative deviation between central differences and ``gradient``
    over the probed entries, with |a-b| / max(|a|, |b|, 1e-12)."""
    worst = 0.0
    for i in probes:
        h = steps[i] if np.ndim(steps) else float(steps)
        xp = x0.copy()
        xp[i] = x0[i] + h
        jp = cost_fn(xp)
        xp[i] = x0[i] - h
        jm = cost_fn(xp)
        fd = (jp - jm) / (2.0 * h)
        a, b = fd, gradient[i]
        dev = abs(a - b) / max(abs(a), abs(b), 1e-12)
        worst = max(worst, dev)
    return worst


def fd_check(
    model: fem.Model,
    sensors: sens.SensorSet,
    meas: sens.Measurements,
    field: str,
    h_rel: float,
    probe_count: int,
    rng: np.random.Generator | None = None,
    include_temp_cost: bool = True,
) -> float:
    """Verify the adjoint gradient of the physical-field cost by central
    differences on randomly probed entries.

    ``field`` selects "youngs" (step ``h_rel`` relative per element) or
    "delta_t" (absolute step ``h_rel`` degC). Returns the max relative
    deviation over the probes.
    """
    from .objective import cost_from_samples

    rng = rng if rng is not None else np.random.default_rng(0)
    op = fem.FemOperator.from_model(model)

    def evaluate(youngs, delta_t) -> float:
        primal = op.solve(youngs, delta_t)
        u_comp = sens.sample_displacements(sensors, primal.u)
        dt_comp = sens.sample_temperatures(sensors, delta_t)
        br = cost_from_samples(sensors, meas, u_comp, dt_comp)
        return br.j_disp + (br.j_temp if include_temp_cost else 0.0)

    primal = op.solve(model.youngs, model.delta_t)
    u_comp = sens.sample_displacements(sensors, primal.u)
    adj = solve_adjoint(
        primal.stiffness_handle, -cost_u_gradient(sensors, meas, u_comp)
    )

    if field == "youngs":
        gradient = grad_e(model, primal, adj, op)
        x0 = model.youngs.copy()
        steps = h_rel * np.abs(x0)
        probes = rng.choice(len(x0), size=min(probe_count, len(x0)), replace=False)
        fn = lambda x: evaluate(x, model.delta_t)
    elif field == "delta_t":
        gradient = grad_t(
            model, primal, adj, sensors, meas, op, include_direct=include_temp_cost
        )
        x0 = model.delta_t.copy()
        steps = np.full_like(x0, h_rel)
        probes = rng.choice(len(x0), size=min(probe_count, len(x0)), replace=False)
        fn = lambda x: evaluate(model.youngs, x)
    else:
        raise ValueError(f"unknown field selector '{field}'")
    return fd_relative_deviation(fn, gradient, x0, steps, probes)
