"""Figure rendering: triangulated field heatmaps and convergence curves."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.tri import Triangulation

from .readers import RunMesh, SchemaError, read_convergence_csv, read_field_csv, read_mesh

# Fixed color ranges for comparable figures across runs; fields not listed
# are scaled to their own data range.
DEFAULT_RANGES = {
    "delta_t": (6.8, 34.2),
}

FIELD_LABELS = {
    "youngs_modulus": "Young's modulus [Pa]",
    "delta_t": "temperature difference [degC]",
}


@dataclass(frozen=True)
class FigureSpec:
    """One heatmap: which field/snapshot of which CSV, and where to put it."""

    csv_path: Path
    mesh_path: Path
    field: str
    snapshot: str
    out_path: Path
    vmin: float | None = None
    vmax: float | None = None


def render_field(spec: FigureSpec) -> Path:
    """Triangulated heatmap of an elemental or nodal field.

    Elemental fields (one value per triangle) render flat-shaded; nodal
    fields render Gouraud-shaded. The value count must match one of the two,
    otherwise the file is rejected before anything is written.
    """
    mesh = read_mesh(spec.mesh_path)
    groups = read_field_csv(spec.csv_path)
    key = (spec.field, spec.snapshot)
    if key not in groups:
        available = ", ".join(f"{f}/{s}" for f, s in sorted(groups))
        raise SchemaError(
            f"{spec.csv_path}: no rows for field '{spec.field}' snapshot "
            f"'{spec.snapshot}' (have: {available})"
        )
    values = groups[key]
    tri = Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)

    vmin, vmax = spec.vmin, spec.vmax
    if vmin is None or vmax is None:
        lo, hi = DEFAULT_RANGES.get(spec.field, (values.min(), values.max()))
        vmin = lo if vmin is None else vmin
        vmax = hi if vmax is None else vmax

    fig, ax = plt.subplots(figsize=(7.2, 3.9))
    if len(values) == len(mesh.triangles):
        art = ax.tripcolor(tri, facecolors=values, vmin=vmin, vmax=vmax,
                           cmap="viridis")
    elif len(values) == len(mesh.nodes):
        art = ax.tripcolor(tri, values, shading="gouraud", vmin=vmin,
                           vmax=vmax, cmap="viridis")
    else:
        plt.close(fig)
        raise SchemaError(
            f"{spec.csv_path}: field '{spec.field}' has {len(values)} values, "
            f"mesh has {len(mesh.triangles)} triangles / {len(mesh.nodes)} nodes"
        )
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    label = FIELD_LABELS.get(spec.field, spec.field)
    ax.set_title(f"{label} ({spec.snapshot})")
    fig.colorbar(art, ax=ax, shrink=0.9)
    fig.tight_layout()
    spec.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out_path, dpi=130, metadata={"Software": "fieldplots"})
    plt.close(fig)
    return spec.out_path


def render_convergence(csv_path: str | Path, out_path: str | Path) -> Path:
    """Log-scale cost curves; partitioned histories additionally get a
    subproblem-colored panel and a coupling-iteration count annotation."""
    csv_path, out_path = Path(csv_path), Path(out_path)
    data = read_convergence_csv(csv_path)
    labels = set(data["subproblem"])
    partitioned = labels == {"A", "B"} or labels == {"A"} or labels == {"B"}

    n_axes = 2 if partitioned else 1
    fig, axes = plt.subplots(1, n_axes, figsize=(6.4 * n_axes, 4.2),
                             squeeze=False)
    ax = axes[0][0]
    style = "o-" if len(data["iter"]) == 1 else "-"
    for name, color in (("J", "black"), ("J_D", "tab:blue"), ("J_T", "tab:red")):
        positive = data[name] > 0
        if np.any(positive):
            ax.semilogy(data["iter"][positive], data[name][positive], style,
                        color=color, label=name, linewidth=1.0, markersize=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("cost")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)

    if partitioned:
        axb = axes[0][1]
        for label, color in (("A", "tab:red"), ("B", "tab:blue")):
            mask = data["subproblem"] == label
            pos = mask & (data["J"] > 0)
            if np.any(pos):
                axb.semilogy(data["iter"][pos], data["J"][pos], ".",
                             color=color, markersize=2.5,
                             label=f"subproblem {label}")
        couplings = int(np.sum(
            (data["subproblem"][1:] == "A") & (data["subproblem"][:-1] == "B")
        )) + (1 if data["subproblem"][0] == "A" else 0)
        axb.set_xlabel(f"iteration (coupling iterations: {couplings})")
        axb.set_ylabel("composite cost")
        axb.legend()
        axb.grid(True, which="both", alpha=0.3)

    fig.tight_layout()
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=130, metadata={"Software": "fieldplots"})
    plt.close(fig)
    return out_path


def render_run_directory(run_dir: str | Path, what: str) -> list[Path]:
    """Render all figures of one kind for a completed run directory."""
    run_dir = Path(run_dir)
    written = []
    if what == "fields":
        mesh_path = run_dir / "mesh.txt"
        for csv_name in ("target_fields.csv", "identified_fields.csv"):
            csv_path = run_dir / csv_name
            if not csv_path.exists():
                raise SchemaError(f"missing artifact {csv_path}")
            for field, snapshot in sorted(read_field_csv(csv_path)):
                out = run_dir / f"{field}_{snapshot}.png"
                written.append(render_field(FigureSpec(
                    csv_path=csv_path, mesh_path=mesh_path, field=field,
                    snapshot=snapshot, out_path=out,
                )))
    elif what == "convergence":
        written.append(render_convergence(
            run_dir / "convergence.csv", run_dir / "convergence.png"
        ))
    else:
        raise ValueError(f"unknown render kind '{what}'")
    return written
