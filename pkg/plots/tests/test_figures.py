"""Tests run against hand-written artifact files only: nothing here imports
or invokes the identification package."""

import numpy as np
import pytest

from fieldplots.cli import main
from fieldplots.figures import FigureSpec, render_convergence, render_field, render_run_directory
from fieldplots.readers import SchemaError, read_convergence_csv, read_field_csv, read_mesh

MESH_TEXT = """# unit square, two triangles
nodes 4 triangles 2
0.0 0.0
1.0 0.0
1.0 1.0
0.0 1.0
0 1 2
0 2 3
tag left 2 0 3
"""


def field_csv_text():
    lines = ["field,snapshot,entity_id,x,y,value"]
    for e, v in enumerate([1.0e11, 5.0e10]):
        lines.append(f"youngs_modulus,target,{e},0.5,0.5,{v}")
    for n, v in enumerate([30.0, 25.0, 15.0, 10.0]):
        lines.append(f"delta_t,target,{n},0.0,0.0,{v}")
    return "\n".join(lines) + "\n"


def convergence_text(partitioned=False, rows=6):
    lines = ["iter,subproblem,J,J_D,J_T,step_E,step_T"]
    for i in range(rows):
        sub = ("A" if (i // 2) % 2 == 0 else "B") if partitioned else "mono"
        j = 1.0 / (i + 1)
        lines.append(f"{i},{sub},{j},{0.7 * j},{0.3 * j},0.1,0.1")
    return "\n".join(lines) + "\n"


@pytest.fixture
def run_dir(tmp_path):
    (tmp_path / "mesh.txt").write_text(MESH_TEXT)
    (tmp_path / "target_fields.csv").write_text(field_csv_text())
    (tmp_path / "identified_fields.csv").write_text(
        field_csv_text().replace("target", "final")
    )
    (tmp_path / "convergence.csv").write_text(convergence_text())
    return tmp_path


def test_read_mesh(run_dir):
    mesh = read_mesh(run_dir / "mesh.txt")
    assert mesh.nodes.shape == (4, 2)
    assert mesh.triangles.shape == (2, 3)


def test_read_field_groups(run_dir):
    groups = read_field_csv(run_dir / "target_fields.csv")
    assert set(groups) == {("youngs_modulus", "target"), ("delta_t", "target")}
    assert len(groups[("youngs_modulus", "target")]) == 2
    assert len(groups[("delta_t", "target")]) == 4


def test_render_elemental_field(run_dir):
    out = render_field(FigureSpec(
        csv_path=run_dir / "target_fields.csv",
        mesh_path=run_dir / "mesh.txt",
        field="youngs_modulus", snapshot="target",
        out_path=run_dir / "e.png",
    ))
    assert out.exists() and out.stat().st_size > 0


def test_render_nodal_field_with_fixed_range(run_dir):
    out = render_field(FigureSpec(
        csv_path=run_dir / "target_fields.csv",
        mesh_path=run_dir / "mesh.txt",
        field="delta_t", snapshot="target",
        out_path=run_dir / "t.png",
        vmin=6.8, vmax=34.2,
    ))
    assert out.exists()


def test_rendering_idempotent_and_nonmutating(run_dir):
    csv_before = (run_dir / "target_fields.csv").read_bytes()
    spec = FigureSpec(
        csv_path=run_dir / "target_fields.csv",
        mesh_path=run_dir / "mesh.txt",
        field="delta_t", snapshot="target",
        out_path=run_dir / "t.png",
    )
    render_field(spec)
    first = (run_dir / "t.png").read_bytes()
    render_field(spec)
    assert (run_dir / "t.png").read_bytes() == first
    assert (run_dir / "target_fields.csv").read_bytes() == csv_before


def test_missing_column_reported(run_dir):
    (run_dir / "bad.csv").write_text("field,entity_id,value\na,0,1.0\n")
    with pytest.raises(SchemaError) as err:
        read_field_csv(run_dir / "bad.csv")
    assert "snapshot" in str(err.value)


def test_empty_csv_no_file_written(run_dir):
    (run_dir / "empty.csv").write_text("field,snapshot,entity_id,x,y,value\n")
    out = run_dir / "nope.png"
    with pytest.raises(SchemaError):
        render_field(FigureSpec(
            csv_path=run_dir / "empty.csv", mesh_path=run_dir / "mesh.txt",
            field="delta_t", snapshot="target", out_path=out,
        ))
    assert not out.exists()


def test_value_count_mismatch_rejected(run_dir):
    text = "field,snapshot,entity_id,x,y,value\nweird,target,0,0,0,1.0\n"
    (run_dir / "weird.csv").write_text(text + "weird,target,1,0,0,2.0\n"
                                       + "weird,target,2,0,0,3.0\n")
    with pytest.raises(SchemaError) as err:
        render_field(FigureSpec(
            csv_path=run_dir / "weird.csv", mesh_path=run_dir / "mesh.txt",
            field="weird", snapshot="target", out_path=run_dir / "w.png",
        ))
    assert "3 values" in str(err.value)


def test_render_convergence_monolithic(run_dir):
    out = render_convergence(run_dir / "convergence.csv", run_dir / "c.png")
    assert out.exists() and out.stat().st_size > 0


def test_render_convergence_partitioned(tmp_path):
    (tmp_path / "convergence.csv").write_text(convergence_text(partitioned=True, rows=8))
    out = render_convergence(tmp_path / "convergence.csv", tmp_path / "c.png")
    assert out.exists()


def test_render_convergence_single_row(tmp_path):
    (tmp_path / "convergence.csv").write_text(convergence_text(rows=1))
    out = render_convergence(tmp_path / "convergence.csv", tmp_path / "c.png")
    assert out.exists()


def test_render_convergence_empty_rejected(tmp_path):
    (tmp_path / "convergence.csv").write_text(
        "iter,subproblem,J,J_D,J_T,step_E,step_T\n"
    )
    with pytest.raises(SchemaError):
        read_convergence_csv(tmp_path / "convergence.csv")


def test_render_run_directory_fields(run_dir):
    written = render_run_directory(run_dir, "fields")
    names = {p.name for p in written}
    assert "youngs_modulus_target.png" in names
    assert "delta_t_final.png" in names
    assert len(written) == 4


def test_cli_fields_and_convergence(run_dir, capsys):
    assert main(["fields", str(run_dir)]) == 0
    assert main(["convergence", str(run_dir)]) == 0
    out = capsys.readouterr().out
    assert "convergence.png" in out


def test_cli_schema_violation_fails_cleanly(tmp_path, capsys):
    (tmp_path / "mesh.txt").write_text(MESH_TEXT)
    (tmp_path / "target_fields.csv").write_text("field,value\na,1\n")
    (tmp_path / "identified_fields.csv").write_text("field,value\na,1\n")
    code = main(["fields", str(tmp_path)])
    assert code == 1
    assert "missing column" in capsys.readouterr().err


def test_cli_missing_artifacts_fails_cleanly(tmp_path, capsys):
    code = main(["fields", str(tmp_path)])
    assert code == 1
    assert "error" in capsys.readouterr().err
