"""Readers for the identification run artifacts.

The run directory layout and file schemas are documented in the main
package's docs/artifacts.md:

* ``mesh.txt``: ``nodes N triangles M`` header, N ``x y`` lines, M ``i j k``
  lines, optional ``tag`` lines, ``#`` comments.
* field CSVs: columns ``field,snapshot,entity_id,x,y,value``.
* ``convergence.csv``: columns ``iter,subproblem,J,J_D,J_T,step_E,step_T``.

Only the text formats couple this package to the producer; nothing is
imported from it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIELD_COLUMNS = ["field", "snapshot", "entity_id", "x", "y", "value"]
CONVERGENCE_COLUMNS = ["iter", "subproblem", "J", "J_D", "J_T", "step_E", "step_T"]


class SchemaError(Exception):
    """Artifact file violates its documented schema."""


@dataclass(frozen=True)
class RunMesh:
    nodes: np.ndarray       # (N, 2)
    triangles: np.ndarray   # (M, 3)


def read_mesh(path: str | Path) -> RunMesh:
    tokens_per_line = []
    for no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            tokens_per_line.append((no, stripped.split()))
    if not tokens_per_line:
        raise SchemaError(f"{path}: empty mesh file")
    no, head = tokens_per_line[0]
    if len(head) != 4 or head[0] != "nodes" or head[2] != "triangles":
        raise SchemaError(f"{path}:{no}: expected 'nodes N triangles M' header")
    n_nodes, n_tris = int(head[1]), int(head[3])
    body = tokens_per_line[1:]
    if len(body) < n_nodes + n_tris:
        raise SchemaError(f"{path}: fewer lines than declared counts")
    nodes = np.array(
        [[float(t[0]), float(t[1])] for _, t in body[:n_nodes]]
    )
    triangles = np.array(
        [[int(t[0]), int(t[1]), int(t[2])] for _, t in
         body[n_nodes:n_nodes + n_tris]],
        dtype=int,
    )
    if triangles.size and triangles.max() >= n_nodes:
        raise SchemaError(f"{path}: triangle references node out of range")
    return RunMesh(nodes=nodes, triangles=triangles)


def read_field_csv(path: str | Path) -> dict[tuple[str, str], np.ndarray]:
    """Field values keyed by (field, snapshot), ordered by entity_id."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in FIELD_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing column '{col}'")
        groups: dict[tuple[str, str], list[tuple[int, float]]] = {}
        for row in reader:
            try:
                key = (row["field"], row["snapshot"])
                groups.setdefault(key, []).append(
                    (int(row["entity_id"]), float(row["value"]))
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}: malformed row {row}") from exc
    if not groups:
        raise SchemaError(f"{path}: no data rows")
    out = {}
    for key, pairs in groups.items():
        pairs.sort()
        out[key] = np.array([v for _, v in pairs])
    return out


def read_convergence_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Convergence history as column arrays."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in CONVERGENCE_COLUMNS:
            if col not in header:
                raise SchemaError(f"{path}: missing column '{col}'")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    try:
        return {
            "iter": np.array([int(r["iter"]) for r in rows]),
            "subproblem": np.array([r["subproblem"] for r in rows]),
            "J": np.array([float(r["J"]) for r in rows]),
            "J_D": np.array([float(r["J_D"]) for r in rows]),
            "J_T": np.array([float(r["J_T"]) for r in rows]),
        }
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed numeric value") from exc
