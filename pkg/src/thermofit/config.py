"""Scenario configuration: YAML schema, validation and typed access.

Validation errors carry the dotted path of the offending field so the CLI
can point at the exact config entry (exit code 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

SCENARIOS = (
    "ignore_temp",
    "constant_temp",
    "interpolate_temp",
    "identify_monolithic",
    "identify_partitioned",
)

_MISSING = object()


class ConfigError(Exception):
    """Invalid configuration; ``path`` is the dotted field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"config field '{path}': {message}")


def _get(mapping, path: str, key: str, default=_MISSING):
    if not isinstance(mapping, dict):
        raise ConfigError(path or key, "expected a mapping")
    full = f"{path}.{key}" if path else key
    if key not in mapping:
        if default is _MISSING:
            raise ConfigError(full, "missing required field")
        return default
    return mapping[key]


def _num(mapping, path, key, default=_MISSING) -> float:
    v = _get(mapping, path, key, default)
    full = f"{path}.{key}" if path else key
    if isinstance(v, str):
        # YAML 1.1 reads exponents like 2.0e11 (no sign) as strings
        try:
            return float(v)
        except ValueError:
            raise ConfigError(full, f"expected a number, got {v!r}") from None
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(full, f"expected a number, got {v!r}")
    return float(v)


def _int(mapping, path, key, default=_MISSING) -> int:
    v = _get(mapping, path, key, default)
    full = f"{path}.{key}" if path else key
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(full, f"expected an integer, got {v!r}")
    return v


def _str(mapping, path, key, default=_MISSING, choices=None) -> str:
    v = _get(mapping, path, key, default)
    full = f"{path}.{key}" if path else key
    if not isinstance(v, str):
        raise ConfigError(full, f"expected a string, got {v!r}")
    if choices is not None and v not in choices:
        raise ConfigError(full, f"must be one of {', '.join(choices)}; got '{v}'")
    return v


def _pair(mapping, path, key, default=_MISSING) -> tuple[float, float]:
    v = _get(mapping, path, key, default)
    full = f"{path}.{key}" if path else key
    if v is default and default is not _MISSING:
        return v
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(full, "expected a pair [a, b]")
    try:
        return float(v[0]), float(v[1])
    except (TypeError, ValueError):
        raise ConfigError(full, f"expected numeric pair, got {v!r}") from None


@dataclass(frozen=True)
class MeshSpec:
    kind: str                          # plate_with_hole | rect | file
    lx: float = 60.0
    ly: float = 30.0
    hole_center: tuple[float, float] = (30.0, 15.0)
    hole_diameter: float = 10.0
    target_elements: int = 646
    nx: int = 4
    ny: int = 2
    path: str = ""


@dataclass(frozen=True)
class ThermalSpec:
    """Closed-form target thermal field over the plate."""

    kind: str                          # linear | gaussian | constant
    left: float = 0.0                  # linear: value at x_min
    right: float = 0.0                 # linear: value at x_max
    x_min: float = 0.0
    x_max: float = 1.0
    t_min: float = 0.0                 # gaussian: far-field value
    t_max: float = 0.0                 # gaussian: peak value
    center_x: float = 0.0
    spread: float = 1.0                # gaussian: squared-distance denominator
    value: float = 0.0                 # constant

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))[:, 0]
        if self.kind == "linear":
            frac = (x - self.x_min) / (self.x_max - self.x_min)
            return self.left + (self.right - self.left) * frac
        if self.kind == "gaussian":
            return self.t_min + (self.t_max - self.t_min) * np.exp(
                -((x - self.center_x) ** 2) / self.spread
            )
        if self.kind == "constant":
            return np.full(len(x), self.value)
        raise ConfigError("target.thermal.kind", f"unknown kind '{self.kind}'")


@dataclass(frozen=True)
class LineLoad:
    edge: str
    qx: float
    qy: float


@dataclass(frozen=True)
class FilterSettings:
    chain: str = "sigmoid_then_vm"
    youngs_radius: float = 5.0
    delta_t_radius: float = 20.0


@dataclass(frozen=True)
class OptimizerSettings:
    algorithm: str = "steepest_bb"
    bb_variant: str = "bb1"
    max_step: float = 2.0
    max_iters: int = 2000
    target_reduction: float | None = 1e-6
    target_value: float | None = None
    momentum: float = 0.9


@dataclass(frozen=True)
class CouplingSettings:
    beta: float = 1.0
    inner_reduction: float = 0.2
    inner_max_iters: int = 10
    outer_max_iters: int = 4000


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    mesh: MeshSpec
    thickness: float
    poisson: float
    alpha: float
    pristine_youngs: float
    fixed_edges: tuple[str, ...]
    loads: tuple[LineLoad, ...]
    damage_youngs: float
    damage_boxes: tuple[tuple[float, float, float, float], ...]
    thermal: ThermalSpec
    disp_points: np.ndarray
    temp_points: np.ndarray
    response_weights: tuple[float, float]
    constant_temp_value: float
    initial_youngs: float
    initial_delta_t: float
    youngs_bounds: tuple[float, float]
    delta_t_bounds: tuple[float, float]
    filter: FilterSettings
    optimizer: OptimizerSettings
    coupling: CouplingSettings
    knn_neighbors: int
    noise_std: tuple[float, float]
    output_dir: str


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "config file does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be a mapping")
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    from .sensors import builtin_layouts

    scenario = _str(raw, "", "scenario", choices=SCENARIOS)

    m = _get(raw, "", "mesh")
    kind = _str(m, "mesh", "kind", choices=("plate_with_hole", "rect", "file"))
    mesh_spec = MeshSpec(
        kind=kind,
        lx=_num(m, "mesh", "lx", 60.0),
        ly=_num(m, "mesh", "ly", 30.0),
        hole_center=_pair(m, "mesh", "hole_center", (30.0, 15.0)),
        hole_diameter=_num(m, "mesh", "hole_diameter", 10.0),
        target_elements=_int(m, "mesh", "target_elements", 646),
        nx=_int(m, "mesh", "nx", 4),
        ny=_int(m, "mesh", "ny", 2),
        path=_str(m, "mesh", "path", ""),
    )
    if kind == "file":
        if not mesh_spec.path:
            raise ConfigError("mesh.path", "missing required field")
        mesh_path = Path(mesh_spec.path)
        if base_dir is not None and not mesh_path.is_absolute():
            mesh_path = base_dir / mesh_path
        if not mesh_path.exists():
            raise ConfigError("mesh.path", f"file '{mesh_path}' does not exist")
        mesh_spec = MeshSpec(**{**mesh_spec.__dict__, "path": str(mesh_path)})

    mat = _get(raw, "", "material")
    thickness = _num(mat, "material", "thickness")
    poisson = _num(mat, "material", "poisson")
    alpha = _num(mat, "material", "alpha")
    pristine = _num(mat, "material", "pristine_youngs")

    sup = _get(raw, "", "supports")
    fixed_edges = _get(sup, "supports", "fixed_edges")
    if not isinstance(fixed_edges, list) or not fixed_edges:
        raise ConfigError("supports.fixed_edges", "expected a non-empty list")

    loads_raw = _get(raw, "", "loads", [])
    loads = []
    for i, entry in enumerate(loads_raw):
        p = f"loads[{i}]"
        loads.append(
            LineLoad(
                edge=_str(entry, p, "edge"),
                qx=_num(entry, p, "qx", 0.0),
                qy=_num(entry, p, "qy", 0.0),
            )
        )

    tgt = _get(raw, "", "target")
    damage_youngs = _num(tgt, "target", "damage_youngs", pristine)
    boxes_raw = _get(tgt, "target", "damage_boxes", [])
    boxes = []
    for i, b in enumerate(boxes_raw):
        if not isinstance(b, (list, tuple)) or len(b) != 4:
            raise ConfigError(
                f"target.damage_boxes[{i}]", "expected [x0, x1, y0, y1]"
            )
        boxes.append(tuple(float(v) for v in b))

    th = _get(tgt, "target", "thermal")
    tkind = _str(th, "target.thermal", "kind", choices=("linear", "gaussian", "constant"))
    thermal = ThermalSpec(
        kind=tkind,
        left=_num(th, "target.thermal", "left", 0.0),
        right=_num(th, "target.thermal", "right", 0.0),
        x_min=_num(th, "target.thermal", "x_min", 0.0),
        x_max=_num(th, "target.thermal", "x_max", mesh_spec.lx),
        t_min=_num(th, "target.thermal", "t_min", 0.0),
        t_max=_num(th, "target.thermal", "t_max", 0.0),
        center_x=_num(th, "target.thermal", "center_x", 0.0),
        spread=_num(th, "target.thermal", "spread", 1.0),
        value=_num(th, "target.thermal", "value", 0.0),
    )

    sen = _get(raw, "", "sensors")
    disp_points = _sensor_points(sen, "sensors", "displacement", builtin_layouts)
    temp_points = _sensor_points(
        sen, "sensors", "temperature", builtin_layouts, required=False
    )
    response_weights = _pair(sen, "sensors", "response_weights", (1.0, 1.0))

    init = _get(raw, "", "initial", {})
    initial_youngs = _num(init, "initial", "youngs", pristine)
    initial_delta_t = _num(init, "initial", "delta_t", 20.0)

    ident = _get(raw, "", "identification")
    youngs_bounds = _pair(ident, "identification", "youngs_bounds")
    delta_t_bounds = _pair(ident, "identification", "delta_t_bounds", (-10.0, 40.0))

    f = _get(ident, "identification", "filter", {})
    filt = FilterSettings(
        chain=_str(
            f, "identification.filter", "chain", "sigmoid_then_vm",
            choices=("vm_then_sigmoid", "sigmoid_then_vm"),
        ),
        youngs_radius=_num(f, "identification.filter", "youngs_radius", 5.0),
        delta_t_radius=_num(f, "identification.filter", "delta_t_radius", 20.0),
    )

    o = _get(ident, "identification", "optimizer", {})
    target_reduction = o.get("target_reduction", 1e-6) if isinstance(o, dict) else 1e-6
    target_value = o.get("target_value") if isinstance(o, dict) else None
    opt = OptimizerSettings(
        algorithm=_str(
            o, "identification.optimizer", "algorithm", "steepest_bb",
            choices=("steepest_bb", "momentum_bb"),
        ),
        bb_variant=_str(
            o, "identification.optimizer", "bb_variant", "bb1",
            choices=("bb1", "bb2"),
        ),
        max_step=_num(o, "identification.optimizer", "max_step", 2.0),
        max_iters=_int(o, "identification.optimizer", "max_iters", 2000),
        target_reduction=(
            float(target_reduction) if target_reduction is not None else None
        ),
        target_value=float(target_value) if target_value is not None else None,
        momentum=_num(o, "identification.optimizer", "momentum", 0.9),
    )

    c = _get(ident, "identification", "coupling", {})
    coupling = CouplingSettings(
        beta=_num(c, "identification.coupling", "beta", 1.0),
        inner_reduction=_num(c, "identification.coupling", "inner_reduction", 0.2),
        inner_max_iters=_int(c, "identification.coupling", "inner_max_iters", 10),
        outer_max_iters=_int(c, "identification.coupling", "outer_max_iters", 4000),
    )

    interp = _get(raw, "", "interpolation", {})
    knn = _int(interp, "interpolation", "k", 3)

    noise = _get(raw, "", "noise", {})
    noise_std = (
        _num(noise, "noise", "displacement_std", 0.0),
        _num(noise, "noise", "temperature_std", 0.0),
    )

    out = _get(raw, "", "output", {})
    output_dir = _str(out, "output", "directory", "run_output")

    constant_temp_value = _num(raw, "", "constant_temp_value", 20.0)

    if scenario == "interpolate_temp" and len(temp_points) < knn:
        raise ConfigError(
            "sensors.temperature",
            f"interpolation needs at least k={knn} temperature sensors",
        )
    if scenario in ("identify_monolithic", "identify_partitioned") and not len(
        temp_points
    ):
        raise ConfigError(
            "sensors.temperature", "temperature identification needs sensors"
        )

    return ScenarioConfig(
        scenario=scenario,
        mesh=mesh_spec,
        thickness=thickness,
        poisson=poisson,
        alpha=alpha,
        pristine_youngs=pristine,
        fixed_edges=tuple(str(e) for e in fixed_edges),
        loads=tuple(loads),
        damage_youngs=damage_youngs,
        damage_boxes=tuple(boxes),
        thermal=thermal,
        disp_points=disp_points,
        temp_points=temp_points,
        response_weights=response_weights,
        constant_temp_value=constant_temp_value,
        initial_youngs=initial_youngs,
        initial_delta_t=initial_delta_t,
        youngs_bounds=youngs_bounds,
        delta_t_bounds=delta_t_bounds,
        filter=filt,
        optimizer=opt,
        coupling=coupling,
        knn_neighbors=knn,
        noise_std=noise_std,
        output_dir=output_dir,
    )


def _sensor_points(sen, path, channel, layouts, required=True) -> np.ndarray:
    layout_key = f"{channel}_layout"
    points_key = f"{channel}_points"
    if layout_key in sen and points_key in sen:
        raise ConfigError(
            f"{path}.{layout_key}", f"give either {layout_key} or {points_key}"
        )
    if layout_key in sen:
        name = _str(sen, path, layout_key)
        try:
            return layouts(name)
        except Exception as exc:
            raise ConfigError(f"{path}.{layout_key}", str(exc)) from exc
    if points_key in sen:
        pts = sen[points_key]
        if not isinstance(pts, list):
            raise ConfigError(f"{path}.{points_key}", "expected a list of [x, y]")
        arr = []
        for i, p in enumerate(pts):
            if not isinstance(p, (list, tuple)) or len(p) != 2:
                raise ConfigError(
                    f"{path}.{points_key}[{i}]", "expected a pair [x, y]"
                )
            arr.append((float(p[0]), float(p[1])))
        return np.asarray(arr, dtype=float)
    if required:
        raise ConfigError(
            f"{path}.{layout_key}", f"missing {layout_key} or {points_key}"
        )
    return np.empty((0, 2))


def target_field_eval(spec: ThermalSpec, points: np.ndarray) -> np.ndarray:
    """Evaluate a closed-form thermal field spec at the given points."""
    return spec.evaluate(points)
