"""Sensor-mismatch cost: displacement term, temperature term and their sum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem, sensors as sens


@dataclass(frozen=True)
class CostBreakdown:
    j_total: float
    j_disp: float
    j_temp: float

    def __post_init__(self):
        if self.j_disp < 0 or self.j_temp < 0:
            raise ValueError("cost terms must be non-negative")


def cost_from_samples(
    sensors: sens.SensorSet,
    meas: sens.Measurements,
    u_comp: np.ndarray,
    dt_comp: np.ndarray,
) -> CostBreakdown:
    """Weighted half-sum-of-squares mismatch per channel.

    j_disp = 1/2 * Omega_1 * sum_j omega_j * |u_j_comp - u_j_meas|^2 over the
    measured components; j_temp analogously over temperature sensors.
    """
    omega1, omega2 = sensors.response_weights
    j_disp = 0.0
    if sensors.n_disp:
        if sensors.omega_disp is None:
            raise sens.SensorError("displacement weights not bound")
        du = np.where(sensors.disp_components, u_comp - meas.u_meas, 0.0)
        j_disp = 0.5 * omega1 * sensors.omega_disp * float(np.sum(du * du))
    j_temp = 0.0
    if sensors.n_temp:
        if sensors.omega_temp is None:
            raise sens.SensorError("temperature weights not bound")
        dt = dt_comp - meas.dt_meas
        j_temp = 0.5 * omega2 * sensors.omega_temp * float(np.sum(dt * dt))
    return CostBreakdown(j_total=j_disp + j_temp, j_disp=j_disp, j_temp=j_temp)


def cost(
    model: fem.Model,
    primal: fem.PrimalSolution,
    sensors: sens.SensorSet,
    meas: sens.Measurements,
) -> CostBreakdown:
    """Evaluate the cost of the given primal solution against measurements."""
    u_comp, dt_comp = sens.sample(model, primal, sensors)
    return cost_from_samples(sensors, meas, u_comp, dt_comp)
