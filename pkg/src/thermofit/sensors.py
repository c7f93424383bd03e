"""Sensor layouts, field sampling at sensor points, measurement synthesis and
the maximum-measured-value normalization weights.

Sensors are bound to the mesh at construction: each point is located in its
containing triangle and sampled by barycentric interpolation, which reduces
to the nodal value when a sensor coincides with a node.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import fem
from .mesh import Mesh

BARY_TOL = 1e-9


class SensorError(Exception):
    """Sensor placement or measurement binding failure."""


@dataclass(frozen=True)
class SensorSet:
    """Displacement and temperature sensors bound to a mesh.

    ``disp_components`` masks which displacement components each sensor
    records (x, y). ``omega_disp`` / ``omega_temp`` are the per-sensor
    weights, populated once measurements are bound; ``response_weights``
    holds the per-channel weights applied on top.
    """

    mesh: Mesh
    disp_points: np.ndarray        # (m, 2)
    disp_triangles: np.ndarray     # (m,)
    disp_bary: np.ndarray          # (m, 3)
    disp_components: np.ndarray    # (m, 2) bool
    temp_points: np.ndarray        # (o, 2)
    temp_triangles: np.ndarray     # (o,)
    temp_bary: np.ndarray          # (o, 3)
    omega_disp: float | None = None
    omega_temp: float | None = None
    response_weights: tuple[float, float] = (1.0, 1.0)

    @property
    def n_disp(self) -> int:
        return len(self.disp_points)

    @property
    def n_temp(self) -> int:
        return len(self.temp_points)

    def with_weights(self, omega_disp, omega_temp) -> "SensorSet":
        return replace(self, omega_disp=omega_disp, omega_temp=omega_temp)


@dataclass(frozen=True)
class Measurements:
    """Recorded target values: displacements per sensor/component [m] and
    temperature differences per sensor [degC]."""

    u_meas: np.ndarray             # (m, 2), unmeasured components zeroed
    dt_meas: np.ndarray            # (o,)
    provenance: str = ""

    def __post_init__(self):
        if not (np.all(np.isfinite(self.u_meas)) and np.all(np.isfinite(self.dt_meas))):
            raise SensorError("non-finite measurement values")


def locate_points(mesh: Mesh, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Containing triangle and barycentric weights for each query point.

    Raises ``SensorError`` for points outside the mesh (beyond ``BARY_TOL``).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = mesh.nodes[mesh.triangles]                     # (M, 3, 2)
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (
        c[:, 0] - a[:, 0]
    ) * (b[:, 1] - a[:, 1])

    tri_idx = np.empty(len(points), dtype=np.int64)
    bary = np.empty((len(points), 3))
    for i, q in enumerate(points):
        w1 = (
            (b[:, 0] - q[0]) * (c[:, 1] - q[1])
            - (c[:, 0] - q[0]) * (b[:, 1] - q[1])
        ) / det
        w2 = (
            (c[:, 0] - q[0]) * (a[:, 1] - q[1])
            - (a[:, 0] - q[0]) * (c[:, 1] - q[1])
        ) / det
        w3 = 1.0 - w1 - w2
        w = np.column_stack([w1, w2, w3])
        worst = w.min(axis=1)
        best = int(np.argmax(worst))
        if worst[best] < -BARY_TOL:
            raise SensorError(
                f"sensor point ({q[0]}, {q[1]}) lies outside the mesh "
                f"(best barycentric deficit {worst[best]:.2e})"
            )
        wb = np.clip(w[best], 0.0, None)
        tri_idx[i] = best
        bary[i] = wb / wb.sum()
    return tri_idx, bary


def make_sensor_set(
    mesh: Mesh,
    disp_points,
    temp_points,
    disp_components=None,
    response_weights: tuple[float, float] = (1.0, 1.0),
) -> SensorSet:
    """Bind sensor coordinates to the mesh.

    ``disp_components`` may be None (both components measured) or an
    (m, 2) boolean mask.
    """
    disp_points = np.asarray(disp_points, dtype=float).reshape(-1, 2)
    temp_points = np.asarray(temp_points, dtype=float).reshape(-1, 2)
    d_tri, d_bary = (
        locate_points(mesh, disp_points)
        if len(disp_points)
        else (np.empty(0, dtype=np.int64), np.empty((0, 3)))
    )
    t_tri, t_bary = (
        locate_points(mesh, temp_points)
        if len(temp_points)
        else (np.empty(0, dtype=np.int64), np.empty((0, 3)))
    )
    if disp_components is None:
        comps = np.ones((len(disp_points), 2), dtype=bool)
    else:
        comps = np.asarray(disp_components, dtype=bool).reshape(-1, 2)
        if comps.shape[0] != len(disp_points):
            raise SensorError("component mask length does not match sensors")
    return SensorSet(
        mesh=mesh,
        disp_points=disp_points,
        disp_triangles=d_tri,
        disp_bary=d_bary,
        disp_components=comps,
        temp_points=temp_points,
        temp_triangles=t_tri,
        temp_bary=t_bary,
        response_weights=response_weights,
    )


def sample(model: fem.Model, primal: fem.PrimalSolution, sensors: SensorSet):
    """Interpolate the computed fields at the sensor points.

    Returns ``(u_comp, dt_comp)`` with shapes (m, 2) and (o,).
    """
    return (
        sample_displacements(sensors, primal.u),
        sample_temperatures(sensors, model.delta_t),
    )


def sample_displacements(sensors: SensorSet, u: np.ndarray) -> np.ndarray:
    if sensors.n_disp == 0:
        return np.empty((0, 2))
    tri_nodes = sensors.mesh.triangles[sensors.disp_triangles]     # (m, 3)
    ux = u[2 * tri_nodes]
    uy = u[2 * tri_nodes + 1]
    return np.column_stack(
        [
            np.einsum("mi,mi->m", sensors.disp_bary, ux),
            np.einsum("mi,mi->m", sensors.disp_bary, uy),
        ]
    )


def sample_temperatures(sensors: SensorSet, delta_t: np.ndarray) -> np.ndarray:
    if sensors.n_temp == 0:
        return np.empty(0)
    tri_nodes = sensors.mesh.triangles[sensors.temp_triangles]
    return np.einsum("mi,mi->m", sensors.temp_bary, delta_t[tri_nodes])


def max_value_weights(meas: Measurements) -> tuple[float | None, float | None]:
    """Per-sensor weights 1 / (maximum measured value)^2 for each channel.

    The displacement maximum is taken over the infinity norm of each sensor's
    measured components. Channels without sensors return None; an all-zero
    channel cannot be normalized.
    """
    omega_disp = None
    omega_temp = None
    if len(meas.u_meas):
        u_max = float(np.abs(meas.u_meas).max())
        if u_max == 0.0:
            raise SensorError("cannot normalize zero displacement measurements")
        omega_disp = 1.0 / (u_max * u_max)
    if len(meas.dt_meas):
        t_max = float(np.abs(meas.dt_meas).max())
        if t_max == 0.0:
            raise SensorError("cannot normalize zero temperature measurements")
        omega_temp = 1.0 / (t_max * t_max)
    return omega_disp, omega_temp


def synthesize_measurements(
    target_model: fem.Model,
    sensors: SensorSet,
    noise_std: tuple[float, float] = (0.0, 0.0),
    rng: np.random.Generator | None = None,
) -> Measurements:
    """Record synthetic measurements by solving the target model.

    The same mesh and solver produce the data used for identification
    (deliberate inverse crime). White noise with the given per-channel
    standard deviations can be added; it defaults to zero.
    """
    primal = fem.solve_primal(target_model)
    u_comp, dt_comp = sample(target_model, primal, sensors)
    u_meas = np.where(sensors.disp_components, u_comp, 0.0)
    dt_meas = dt_comp.copy()
    if noise_std[0] > 0 or noise_std[1] > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        u_meas = u_meas + noise_std[0] * rng.standard_normal(u_meas.shape)
        u_meas = np.where(sensors.disp_components, u_meas, 0.0)
        dt_meas = dt_meas + noise_std[1] * rng.standard_normal(dt_meas.shape)
    return Measurements(
        u_meas=u_meas, dt_meas=dt_meas, provenance="synthetic-target-solve"
    )


# Default layouts for the 60 x 30 plate-with-hole benchmark. Coordinates are
# approximate digitizations; scenario configs may override them.
_PLATE_DISP14 = [
    (5.0, 6.5), (17.5, 6.5), (30.0, 6.5), (42.5, 6.5), (55.0, 6.5),
    (5.0, 15.0), (23.0, 15.0), (37.0, 15.0), (55.0, 15.0),
    (5.0, 23.5), (17.5, 23.5), (30.0, 23.5), (42.5, 23.5), (55.0, 23.5),
]
# Two of the six sit near the plate mid-band so the localized field's peak
# is observable; none sit on the left/right edges.
_PLATE_TEMP6 = [
    (10.5, 7.5), (10.5, 22.5),
    (28.5, 9.5), (31.5, 20.5),
    (49.0, 7.5), (49.0, 22.5),
]
# Uniform 4 x 4 grid: covers the edges (good for linear fields) but leaves
# the mid-band unsampled.
_PLATE_TEMP16 = [
    (x, y)
    for y in (0.0, 10.0, 20.0, 30.0)
    for x in (0.0, 20.0, 40.0, 60.0)
]

_LAYOUTS = {
    "plate_disp14": _PLATE_DISP14,
    "plate_temp6": _PLATE_TEMP6,
    "plate_temp16": _PLATE_TEMP16,
}


def builtin_layouts(name: str) -> np.ndarray:
    """Sensor coordinates for a named builtin layout."""
    if name not in _LAYOUTS:
        raise SensorError(
            f"unknown layout '{name}'; valid names: {', '.join(sorted(_LAYOUTS))}"
        )
    return np.asarray(_LAYOUTS[name], dtype=float)
