"""End-to-end scenario execution: build the benchmark problem from a config,
synthesize target measurements, run the configured identification (or
comparison baseline) and export the artifact files.

Artifacts written per run (see docs/artifacts.md for the schemas):
mesh.txt, target_fields.csv, identified_fields.csv, convergence.csv,
summary.csv.
"""

from __future__ import annotations

import csv
import io
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import adjoint as adjoint_mod
from . import baseline, fem, filtering, metrics, optimize
from . import sensors as sens
from .config import ScenarioConfig
from .objective import cost_from_samples
from .mesh import Mesh, generate_plate_with_hole, generate_rect_grid, load_mesh, save_mesh


@dataclass
class ScenarioResult:
    record: optimize.RunRecord
    summary: dict
    out_dir: Path
    target_youngs: np.ndarray
    target_delta_t: np.ndarray


def build_mesh(cfg: ScenarioConfig) -> Mesh:
    m = cfg.mesh
    if m.kind == "plate_with_hole":
        return generate_plate_with_hole(
            m.lx, m.ly, m.hole_center, m.hole_diameter, m.target_elements
        )
    if m.kind == "rect":
        return generate_rect_grid(m.nx, m.ny, m.lx, m.ly)
    return load_mesh(Path(m.path).read_text())


def dirichlet_from_edges(mesh: Mesh, edges) -> tuple[tuple[int, int], ...]:
    pairs = []
    for name in edges:
        if name not in mesh.boundary_tags:
            raise fem.FemError(f"mesh has no boundary tag '{name}'")
        for node in mesh.boundary_tags[name]:
            pairs.append((int(node), 0))
            pairs.append((int(node), 1))
    return tuple(pairs)


def line_load_vector(mesh: Mesh, loads) -> np.ndarray:
    """Consistent nodal forces for line loads [N/m] on tagged boundary edges."""
    f = np.zeros(2 * mesh.n_nodes)
    if not loads:
        return f
    boundary = mesh.boundary_edges()
    for load in loads:
        if load.edge not in mesh.boundary_tags:
            raise fem.FemError(f"mesh has no boundary tag '{load.edge}'")
        tag_nodes = set(int(n) for n in mesh.boundary_tags[load.edge])
        for n1, n2 in boundary:
            if int(n1) in tag_nodes and int(n2) in tag_nodes:
                length = float(np.linalg.norm(mesh.nodes[n2] - mesh.nodes[n1]))
                for n in (n1, n2):
                    f[2 * n] += 0.5 * load.qx * length
                    f[2 * n + 1] += 0.5 * load.qy * length
    return f


def target_youngs_field(mesh: Mesh, cfg: ScenarioConfig) -> np.ndarray:
    youngs = np.full(mesh.n_elements, cfg.pristine_youngs)
    cent = mesh.centroids()
    for x0, x1, y0, y1 in cfg.damage_boxes:
        inside = (
            (cent[:, 0] >= x0)
            & (cent[:, 0] <= x1)
            & (cent[:, 1] >= y0)
            & (cent[:, 1] <= y1)
        )
        youngs[inside] = cfg.damage_youngs
    return youngs


def build_problem(cfg: ScenarioConfig, seed: int | None = None):
    """Assemble everything a scenario needs; returns a dict of parts."""
    mesh = build_mesh(cfg)
    dirichlet = dirichlet_from_edges(mesh, cfg.fixed_edges)
    f_ext = line_load_vector(mesh, cfg.loads)

    target_youngs = target_youngs_field(mesh, cfg)
    target_delta_t = cfg.thermal.evaluate(mesh.nodes)

    bounds_e = cfg.youngs_bounds
    bounds_t = cfg.delta_t_bounds
    target_model = fem.Model(
        mesh=mesh,
        thickness=cfg.thickness,
        poisson=cfg.poisson,
        alpha=cfg.alpha,
        youngs=target_youngs,
        delta_t=target_delta_t,
        youngs_bounds=(
            min(bounds_e[0], target_youngs.min()),
            max(bounds_e[1], target_youngs.max()),
        ),
        delta_t_bounds=(
            min(bounds_t[0], float(target_delta_t.min())),
            max(bounds_t[1], float(target_delta_t.max())),
        ),
        dirichlet=dirichlet,
        f_ext=f_ext,
    )

    sensor_set = sens.make_sensor_set(
        mesh,
        cfg.disp_points,
        cfg.temp_points,
        response_weights=cfg.response_weights,
    )
    rng = np.random.default_rng(seed if seed is not None else 0)
    measurements = sens.synthesize_measurements(
        target_model, sensor_set, noise_std=cfg.noise_std, rng=rng
    )
    omega_d, omega_t = sens.max_value_weights(measurements)
    sensor_set = sensor_set.with_weights(omega_d, omega_t)

    identify = (
        ("e", "t")
        if cfg.scenario in ("identify_monolithic", "identify_partitioned")
        else ("e",)
    )
    use_temp_cost = "t" in identify

    chain_e = filtering.FieldChain(
        op=filtering.build_kernel(mesh.centroids(), cfg.filter.youngs_radius),
        lo=bounds_e[0],
        hi=bounds_e[1],
        order=cfg.filter.chain,
    )
    chain_t = None
    fixed_delta_t = None
    if "t" in identify:
        chain_t = filtering.FieldChain(
            op=filtering.build_kernel(mesh.nodes, cfg.filter.delta_t_radius),
            lo=bounds_t[0],
            hi=bounds_t[1],
            order=cfg.filter.chain,
        )
    else:
        fixed_delta_t = fixed_thermal_field(cfg, mesh, sensor_set, measurements)

    base_model = fem.Model(
        mesh=mesh,
        thickness=cfg.thickness,
        poisson=cfg.poisson,
        alpha=cfg.alpha,
        youngs=np.full(mesh.n_elements, cfg.initial_youngs),
        delta_t=(
            np.full(mesh.n_nodes, cfg.initial_delta_t)
            if fixed_delta_t is None
            else fixed_delta_t
        ),
        youngs_bounds=bounds_e,
        delta_t_bounds=(
            bounds_t
            if fixed_delta_t is None
            else (
                min(bounds_t[0], float(fixed_delta_t.min())),
                max(bounds_t[1], float(fixed_delta_t.max())),
            )
        ),
        dirichlet=dirichlet,
        f_ext=f_ext,
    )

    problem = optimize.IdentificationProblem(
        base_model=base_model,
        sensor_set=sensor_set,
        measurements=measurements,
        chain_e=chain_e,
        chain_t=chain_t,
        fixed_delta_t=fixed_delta_t,
        identify=identify,
        use_temp_cost=use_temp_cost,
    )
    return {
        "mesh": mesh,
        "problem": problem,
        "target_youngs": target_youngs,
        "target_delta_t": target_delta_t,
        "sensor_set": sensor_set,
        "measurements": measurements,
    }


def fixed_thermal_field(
    cfg: ScenarioConfig,
    mesh: Mesh,
    sensor_set: sens.SensorSet,
    measurements: sens.Measurements,
) -> np.ndarray:
    """The non-identified thermal field of the comparison scenarios."""
    if cfg.scenario == "ignore_temp":
        return np.zeros(mesh.n_nodes)
    if cfg.scenario == "constant_temp":
        return baseline.constant_field(cfg.constant_temp_value, mesh.n_nodes)
    if cfg.scenario == "interpolate_temp":
        return baseline.knn_interpolate(
            sensor_set.temp_points,
            measurements.dt_meas,
            mesh.nodes,
            baseline.InterpolationConfig(k=cfg.knn_neighbors),
        )
    raise ValueError(f"scenario '{cfg.scenario}' identifies the thermal field")


def run_scenario(
    cfg: ScenarioConfig, out_dir: str | Path | None = None, seed: int | None = None
) -> ScenarioResult:
    """Execute a configured scenario and write its artifacts.

    On failure the partial artifacts stay in place and an ``error.txt`` with
    the traceback is written before the exception propagates.
    """
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _run_scenario_inner(cfg, out, seed)
    except Exception:
        (out / "error.txt").write_text(traceback.format_exc())
        raise


def _run_scenario_inner(cfg, out: Path, seed) -> ScenarioResult:
    parts = build_problem(cfg, seed=seed)
    mesh: Mesh = parts["mesh"]
    problem: optimize.IdentificationProblem = parts["problem"]
    target_youngs = parts["target_youngs"]
    target_delta_t = parts["target_delta_t"]

    opt_cfg = optimize.OptimizerConfig(
        algorithm=cfg.optimizer.algorithm,
        max_step=cfg.optimizer.max_step,
        max_iters=cfg.optimizer.max_iters,
        target_value=cfg.optimizer.target_value,
        target_reduction=cfg.optimizer.target_reduction,
        bb_variant=cfg.optimizer.bb_variant,
        momentum=cfg.optimizer.momentum,
    )
    state = problem.initial_state(cfg.initial_youngs, cfg.initial_delta_t)
    initial_youngs, initial_delta_t = problem.physical_fields(state)

    if cfg.scenario == "identify_partitioned":
        coupling = optimize.CouplingConfig(
            beta=cfg.coupling.beta,
            inner_reduction=cfg.coupling.inner_reduction,
            inner_max_iters=cfg.coupling.inner_max_iters,
            outer_max_iters=cfg.coupling.outer_max_iters,
        )
        record = optimize.run_partitioned(problem, coupling, opt_cfg, state)
    else:
        record = optimize.run_monolithic(problem, opt_cfg, state)

    # Reference errors: the canonical start state (uniform near-pristine E,
    # uniform initial temperature), shared by every scenario of a case.
    eps_e_ref = metrics.rel_l2(np.full_like(target_youngs, cfg.initial_youngs),
                               target_youngs)
    eps_t_ref = metrics.rel_l2(np.full_like(target_delta_t, cfg.initial_delta_t),
                               target_delta_t)
    eps_e_final = metrics.rel_l2(record.final_youngs, target_youngs)
    eps_t_final = metrics.rel_l2(record.final_delta_t, target_delta_t)

    summary = {
        "scenario": cfg.scenario,
        "n_elements": mesh.n_elements,
        "n_nodes": mesh.n_nodes,
        "eps_e_reference": eps_e_ref,
        "eps_e_final": eps_e_final,
        "delta_eps_e_pct": metrics.pct_change(eps_e_final, eps_e_ref),
        "eps_t_reference": eps_t_ref,
        "eps_t_final": eps_t_final,
        "delta_eps_t_pct": metrics.pct_change(eps_t_final, eps_t_ref),
        "primal_solves": record.primal_solves,
        "adjoint_solves": record.adjoint_solves,
    }
    summary.update(optimize.stationarity_report(record))

    write_artifacts(
        out,
        mesh,
        record,
        summary,
        target_youngs,
        target_delta_t,
        initial_youngs,
        initial_delta_t,
    )
    return ScenarioResult(
        record=record,
        summary=summary,
        out_dir=out,
        target_youngs=target_youngs,
        target_delta_t=target_delta_t,
    )


def _field_rows(writer, field_name, snapshot, xy, values):
    for i, (p, v) in enumerate(zip(xy, values)):
        writer.writerow([field_name, snapshot, i, repr(float(p[0])),
                         repr(float(p[1])), repr(float(v))])


def write_artifacts(
    out: Path,
    mesh: Mesh,
    record: optimize.RunRecord,
    summary: dict,
    target_youngs,
    target_delta_t,
    initial_youngs,
    initial_delta_t,
):
    (out / "mesh.txt").write_text(save_mesh(mesh))

    cent = mesh.centroids()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "snapshot", "entity_id", "x", "y", "value"])
    _field_rows(w, "youngs_modulus", "target", cent, target_youngs)
    _field_rows(w, "delta_t", "target", mesh.nodes, target_delta_t)
    (out / "target_fields.csv").write_text(buf.getvalue())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "snapshot", "entity_id", "x", "y", "value"])
    _field_rows(w, "youngs_modulus", "initial", cent, initial_youngs)
    _field_rows(w, "delta_t", "initial", mesh.nodes, initial_delta_t)
    _field_rows(w, "youngs_modulus", "final", cent, record.final_youngs)
    _field_rows(w, "delta_t", "final", mesh.nodes, record.final_delta_t)
    (out / "identified_fields.csv").write_text(buf.getvalue())

    (out / "convergence.csv").write_text(record.to_csv())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    for key, value in summary.items():
        w.writerow([key, repr(value) if isinstance(value, float) else value])
    (out / "summary.csv").write_text(buf.getvalue())


def fd_verify(
    cfg: ScenarioConfig, probes: int = 5, seed: int = 0
) -> dict[str, float]:
    """Gradient verification through the full control chain at the initial
    state: central differences on control entries vs the chained adjoint
    gradient. Returns max relative deviations per active field."""
    parts = build_problem(cfg, seed=seed)
    problem: optimize.IdentificationProblem = parts["problem"]
    state = problem.initial_state(cfg.initial_youngs, cfg.initial_delta_t)
    res = problem.evaluate(state)
    rng = np.random.default_rng(seed)

    def chain_cost(s_e, s_t) -> float:
        trial = filtering.ControlState(s_e=s_e, s_t=s_t)
        youngs, delta_t = problem.physical_fields(trial)
        primal = problem.operator.solve(youngs, delta_t)
        u_comp = sens.sample_displacements(problem.sensors, primal.u)
        dt_comp = sens.sample_temperatures(problem.sensors, delta_t)
        br = cost_from_samples(problem.sensors, problem.measurements, u_comp, dt_comp)
        return br.j_disp + (br.j_temp if problem.use_temp_cost else 0.0)

    out: dict[str, float] = {}
    h = 1e-4
    if "e" in problem.identify:
        idx = rng.choice(len(state.s_e), size=min(probes, len(state.s_e)), replace=False)
        out["youngs_chain"] = adjoint_mod.fd_relative_deviation(
            lambda x: chain_cost(x, state.s_t), res.grad_e, state.s_e,
            np.full_like(state.s_e, h), idx,
        )
    if "t" in problem.identify:
        idx = rng.choice(len(state.s_t), size=min(probes, len(state.s_t)), replace=False)
        out["delta_t_chain"] = adjoint_mod.fd_relative_deviation(
            lambda x: chain_cost(state.s_e, x), res.grad_t, state.s_t,
            np.full_like(state.s_t, h), idx,
        )
    return out
