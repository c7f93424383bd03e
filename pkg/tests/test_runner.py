import csv
from pathlib import Path

import numpy as np
import pytest

from thermofit import config as cfgmod
from thermofit import fem
from thermofit.mesh import generate_rect_grid, load_mesh
from thermofit.runner import (
    build_problem,
    dirichlet_from_edges,
    fd_verify,
    line_load_vector,
    run_scenario,
)
from tests.conftest import small_plate_dict


def test_line_load_total_force():
    mesh = generate_rect_grid(4, 3, 4.0, 3.0)
    f = line_load_vector(mesh, [cfgmod.LineLoad(edge="right", qx=2e6, qy=5e5)])
    assert f[0::2].sum() == pytest.approx(2e6 * 3.0, rel=1e-12)
    assert f[1::2].sum() == pytest.approx(5e5 * 3.0, rel=1e-12)
    # only right-edge nodes are loaded
    loaded = np.flatnonzero(f[0::2])
    assert set(loaded) == set(mesh.boundary_tags["right"])


def test_dirichlet_from_edges():
    mesh = generate_rect_grid(3, 2, 3.0, 2.0)
    pairs = dirichlet_from_edges(mesh, ["left"])
    left = set(int(n) for n in mesh.boundary_tags["left"])
    assert {n for n, _ in pairs} == left
    assert len(pairs) == 2 * len(left)
    with pytest.raises(fem.FemError):
        dirichlet_from_edges(mesh, ["nonexistent"])


def test_run_scenario_writes_all_artifacts(tmp_path):
    cfg = cfgmod.parse_config(small_plate_dict())
    result = run_scenario(cfg, out_dir=tmp_path)
    for name in (
        "mesh.txt", "target_fields.csv", "identified_fields.csv",
        "convergence.csv", "summary.csv",
    ):
        assert (tmp_path / name).exists(), name
    mesh = load_mesh((tmp_path / "mesh.txt").read_text())
    assert mesh.n_elements == 16

    rows = list(csv.DictReader(open(tmp_path / "target_fields.csv")))
    fields = {r["field"] for r in rows}
    assert fields == {"youngs_modulus", "delta_t"}
    assert {r["snapshot"] for r in rows} == {"target"}
    n_young = sum(r["field"] == "youngs_modulus" for r in rows)
    assert n_young == mesh.n_elements

    rows = list(csv.DictReader(open(tmp_path / "identified_fields.csv")))
    assert {r["snapshot"] for r in rows} == {"initial", "final"}

    conv = list(csv.DictReader(open(tmp_path / "convergence.csv")))
    assert list(conv[0].keys()) == [
        "iter", "subproblem", "J", "J_D", "J_T", "step_E", "step_T",
    ]
    assert len(conv) == result.record.iterations

    summary = {r["metric"]: r["value"] for r in
               csv.DictReader(open(tmp_path / "summary.csv"))}
    assert "delta_eps_e_pct" in summary
    assert summary["scenario"] == "identify_monolithic"


def test_identical_configs_produce_bitwise_identical_artifacts(tmp_path):
    cfg = cfgmod.parse_config(small_plate_dict())
    run_scenario(cfg, out_dir=tmp_path / "a")
    run_scenario(cfg, out_dir=tmp_path / "b")
    for name in ("convergence.csv", "identified_fields.csv", "summary.csv",
                 "target_fields.csv", "mesh.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes(), name


def test_scenario_failure_leaves_error_file(tmp_path, monkeypatch):
    cfg = cfgmod.parse_config(small_plate_dict())

    def boom(*args, **kwargs):
        raise fem.FemError("synthetic failure")

    import thermofit.runner as runner_mod

    monkeypatch.setattr(runner_mod, "build_problem", boom)
    with pytest.raises(fem.FemError):
        run_scenario(cfg, out_dir=tmp_path)
    assert "synthetic failure" in (tmp_path / "error.txt").read_text()


def test_fixed_field_scenarios(tmp_path):
    # ignore_temp runs with a zero thermal field
    cfg = cfgmod.parse_config(small_plate_dict("ignore_temp"))
    res = run_scenario(cfg, out_dir=tmp_path / "s1")
    assert np.all(res.record.final_delta_t == 0.0)

    # constant_temp pins the configured value
    d = small_plate_dict("constant_temp")
    d["constant_temp_value"] = 21.5
    cfg = cfgmod.parse_config(d)
    res = run_scenario(cfg, out_dir=tmp_path / "s2")
    assert np.all(res.record.final_delta_t == 21.5)

    # interpolate_temp produces values inside the measured range
    cfg = cfgmod.parse_config(small_plate_dict("interpolate_temp"))
    res = run_scenario(cfg, out_dir=tmp_path / "s3")
    assert res.record.final_delta_t.min() >= 10.0 - 1e-9
    assert res.record.final_delta_t.max() <= 30.0 + 1e-9


def test_delta_eps_reference_is_initial_uniform_state(tmp_path):
    cfg = cfgmod.parse_config(small_plate_dict("constant_temp"))
    res = run_scenario(cfg, out_dir=tmp_path)
    s = res.summary
    # constant 20 degC equals the canonical start: its error IS the reference
    assert s["eps_t_final"] == pytest.approx(s["eps_t_reference"], rel=1e-12)
    assert s["delta_eps_t_pct"] == pytest.approx(0.0, abs=1e-9)


def test_fd_verify_small_problem():
    cfg = cfgmod.parse_config(small_plate_dict())
    devs = fd_verify(cfg, probes=4, seed=1)
    assert set(devs) == {"youngs_chain", "delta_t_chain"}
    for dev in devs.values():
        assert dev <= 1e-5


def test_build_problem_counts(tmp_path):
    cfg = cfgmod.parse_config(small_plate_dict())
    parts = build_problem(cfg)
    assert parts["mesh"].n_elements == 16
    assert parts["sensor_set"].n_disp == 4
    assert parts["sensor_set"].n_temp == 3
    assert parts["problem"].identify == ("e", "t")
    # scenario 1-3 identify only the stiffness field
    cfg1 = cfgmod.parse_config(small_plate_dict("ignore_temp"))
    assert build_problem(cfg1)["problem"].identify == ("e",)
