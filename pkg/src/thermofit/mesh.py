"""Triangulated 2D geometries: structured grids, the plate-with-hole benchmark,
and a plain-text mesh file format.

All meshes are immutable after construction. Node coordinates are in meters,
triangles are 0-based index triples with counter-clockwise orientation, and
named boundary tags map onto node-index sets.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

# Triangles with signed area below this are treated as degenerate.
MIN_TRIANGLE_AREA = 1e-12


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


class MeshParseError(MeshError):
    """Malformed mesh file. Carries the offending 1-based line number."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


@dataclass(frozen=True)
class Mesh:
    """Immutable triangle mesh.

    Attributes
    ----------
    nodes : (N, 2) float array of node coordinates [m].
    triangles : (M, 3) int array of CCW node-index triples.
    boundary_tags : mapping from tag name to sorted node-index array.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_tags: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise MeshError(f"nodes must be (N, 2), got {nodes.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError(f"triangles must be (M, 3), got {tris.shape}")
        if not np.all(np.isfinite(nodes)):
            raise MeshError("non-finite node coordinates")
        if tris.size and (tris.min() < 0 or tris.max() >= len(nodes)):
            raise MeshError("triangle references node index out of range")
        areas = _signed_areas(nodes, tris)
        if np.any(areas <= MIN_TRIANGLE_AREA):
            bad = int(np.argmin(areas))
            raise MeshError(
                f"triangle {bad} is degenerate or clockwise "
                f"(signed area {areas[bad]:.3e})"
            )
        tags = {
            name: np.asarray(np.unique(idx), dtype=np.int64)
            for name, idx in self.boundary_tags.items()
        }
        for name, idx in tags.items():
            if idx.size and (idx.min() < 0 or idx.max() >= len(nodes)):
                raise MeshError(f"tag '{name}' references node out of range")
        nodes.setflags(write=False)
        tris.setflags(write=False)
        for idx in tags.values():
            idx.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "boundary_tags", tags)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        """Per-triangle areas [m^2]."""
        return _signed_areas(self.nodes, self.triangles)

    def centroids(self) -> np.ndarray:
        """Per-triangle centroids, shape (M, 2)."""
        return self.nodes[self.triangles].mean(axis=1)

    def total_area(self) -> float:
        return float(self.areas().sum())

    def boundary_edges(self) -> np.ndarray:
        """Edges belonging to exactly one triangle, shape (B, 2)."""
        tris = self.triangles
        edges = np.concatenate(
            [tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=0
        )
        key = np.sort(edges, axis=1)
        _, inverse, counts = np.unique(
            key, axis=0, return_inverse=True, return_counts=True
        )
        return edges[counts[inverse] == 1]


def _signed_areas(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p = nodes[tris]
    return 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )


def generate_rect_grid(nx: int, ny: int, lx: float, ly: float) -> Mesh:
    """Structured triangulation of [0, lx] x [0, ly] with nx-by-ny cells.

    Each cell is split into two CCW triangles; tags "left", "right",
    "bottom", "top" hold the respective edge nodes.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"grid needs nx, ny >= 1, got ({nx}, {ny})")
    if lx <= 0 or ly <= 0:
        raise ValueError(f"domain lengths must be positive, got ({lx}, {ly})")
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(ix, iy):
        return iy * (nx + 1) + ix

    tris = []
    for iy in range(ny):
        for ix in range(nx):
            n00 = nid(ix, iy)
            n10 = nid(ix + 1, iy)
            n01 = nid(ix, iy + 1)
            n11 = nid(ix + 1, iy + 1)
            tris.append((n00, n10, n11))
            tris.append((n00, n11, n01))
    tags = {
        "left": np.flatnonzero(nodes[:, 0] == 0.0),
        "right": np.flatnonzero(nodes[:, 0] == xs[-1]),
        "bottom": np.flatnonzero(nodes[:, 1] == 0.0),
        "top": np.flatnonzero(nodes[:, 1] == ys[-1]),
    }
    return Mesh(nodes, np.asarray(tris), tags)


def generate_plate_with_hole(
    lx: float,
    ly: float,
    hole_center: tuple[float, float],
    hole_diameter: float,
    target_elems: int,
) -> Mesh:
    """Rectangle minus a circular hole, triangulated from a structured grid.

    Triangles whose centroid falls inside the hole are removed and the grid
    nodes left inside the hole are snapped radially onto the circle, giving a
    polygonal approximation of the circular boundary. The element count lands
    within roughly +-30% of ``target_elems`` depending on grid rounding.
    """
    if lx <= 0 or ly <= 0:
        raise ValueError("plate dimensions must be positive")
    if hole_diameter < 0:
        raise ValueError("hole diameter must be non-negative")
    if hole_diameter == 0.0:
        nx, ny = _grid_dims_for_target(lx, ly, target_elems, hole_frac=0.0)
        return generate_rect_grid(nx, ny, lx, ly)

    cx, cy = hole_center
    r = hole_diameter / 2.0
    if cx - r <= 0 or cx + r >= lx or cy - r <= 0 or cy + r >= ly:
        raise ValueError(
            f"hole (center ({cx}, {cy}), diameter {hole_diameter}) must lie "
            f"strictly inside the {lx} x {ly} rectangle"
        )

    hole_frac = np.pi * r * r / (lx * ly)
    nx, ny = _grid_dims_for_target(lx, ly, target_elems, hole_frac)
    grid = generate_rect_grid(nx, ny, lx, ly)

    center = np.array([cx, cy])
    cent_dist = np.linalg.norm(grid.centroids() - center, axis=1)
    keep = cent_dist > r
    tris = grid.triangles[keep]

    used = np.zeros(grid.n_nodes, dtype=bool)
    used[tris.ravel()] = True

    # Snap surviving nodes that fell inside the disk out onto the circle.
    nodes = np.array(grid.nodes)
    node_dist = np.linalg.norm(nodes - center, axis=1)
    inside = used & (node_dist < r)
    for i in np.flatnonzero(inside):
        d = node_dist[i]
        if d < 1e-12:
            raise MeshError("kept node coincides with hole center")
        nodes[i] = center + (nodes[i] - center) * (r / d)

    remap = -np.ones(grid.n_nodes, dtype=np.int64)
    remap[used] = np.arange(used.sum())
    nodes = nodes[used]
    tris = remap[tris]

    tags = {
        name: remap[idx[used[idx]]] for name, idx in grid.boundary_tags.items()
    }
    on_circle = np.flatnonzero(
        np.abs(np.linalg.norm(nodes - center, axis=1) - r) <= 1e-9 * max(lx, ly)
    )
    tags["hole"] = on_circle

    mesh = Mesh(nodes, tris, tags)
    cd = np.linalg.norm(mesh.centroids() - center, axis=1)
    if np.any(cd <= r):
        raise MeshError("snapping pushed a triangle centroid into the hole")
    return mesh


def _grid_dims_for_target(
    lx: float, ly: float, target_elems: int, hole_frac: float
) -> tuple[int, int]:
    if target_elems < 2:
        raise ValueError("target element count must be at least 2")
    aspect = lx / ly
    ny = max(1, round(np.sqrt(target_elems / (2.0 * aspect * (1.0 - hole_frac)))))
    nx = max(1, round(aspect * ny))
    return int(nx), int(ny)


def save_mesh(mesh: Mesh) -> str:
    """Serialize to the plain-text mesh format (see ``load_mesh``)."""
    out = io.StringIO()
    out.write(f"nodes {mesh.n_nodes} triangles {mesh.n_elements}\n")
    for x, y in mesh.nodes:
        out.write(f"{float(x)!r} {float(y)!r}\n")
    for i, j, k in mesh.triangles:
        out.write(f"{i} {j} {k}\n")
    for name in sorted(mesh.boundary_tags):
        idx = mesh.boundary_tags[name]
        ids = " ".join(str(i) for i in idx)
        out.write(f"tag {name} {len(idx)}{' ' if len(idx) else ''}{ids}\n")
    return out.getvalue()


def load_mesh(text: str) -> Mesh:
    """Parse the plain-text mesh format.

    Layout: a header ``nodes N triangles M``, then N ``x y`` lines, then M
    ``i j k`` lines (0-based), then optional ``tag <name> n i1 ... in`` lines.
    Tokens are whitespace-separated; ``#`` starts a comment. Clockwise
    triangles are re-oriented with a logged warning; degenerate triangles and
    out-of-range indices are parse errors naming the offending line.
    """
    lines = []  # (line_no, tokens)
    for no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append((no, stripped.split()))
    if not lines:
        raise MeshParseError(1, "empty mesh file")

    no, head = lines[0]
    if len(head) != 4 or head[0] != "nodes" or head[2] != "triangles":
        raise MeshParseError(no, "expected header 'nodes N triangles M'")
    try:
        n_nodes, n_tris = int(head[1]), int(head[3])
    except ValueError:
        raise MeshParseError(no, "non-integer counts in header") from None
    if len(lines) < 1 + n_nodes + n_tris:
        raise MeshParseError(no, "file shorter than declared node/triangle counts")

    nodes = np.empty((n_nodes, 2))
    for row, (no, tok) in enumerate(lines[1 : 1 + n_nodes]):
        if len(tok) != 2:
            raise MeshParseError(no, f"expected 'x y', got {len(tok)} tokens")
        try:
            nodes[row] = [float(tok[0]), float(tok[1])]
        except ValueError:
            raise MeshParseError(no, "non-numeric coordinate") from None

    tris = np.empty((n_tris, 3), dtype=np.int64)
    for row, (no, tok) in enumerate(lines[1 + n_nodes : 1 + n_nodes + n_tris]):
        if len(tok) != 3:
            raise MeshParseError(no, f"expected 'i j k', got {len(tok)} tokens")
        try:
            ijk = [int(t) for t in tok]
        except ValueError:
            raise MeshParseError(no, "non-integer node index") from None
        for t in ijk:
            if t < 0 or t >= n_nodes:
                raise MeshParseError(
                    no, f"node index {t} out of range (have {n_nodes} nodes)"
                )
        area = _signed_areas(nodes, np.asarray([ijk]))[0]
        if abs(area) <= MIN_TRIANGLE_AREA:
            raise MeshParseError(no, f"degenerate triangle (area {area:.3e})")
        if area < 0:
            logger.warning(
                "line %d: clockwise triangle %s re-oriented", no, tuple(ijk)
            )
            ijk = [ijk[0], ijk[2], ijk[1]]
        tris[row] = ijk

    tags: dict[str, np.ndarray] = {}
    for no, tok in lines[1 + n_nodes + n_tris :]:
        if tok[0] != "tag" or len(tok) < 3:
            raise MeshParseError(no, "expected 'tag <name> n i1 ... in'")
        name = tok[1]
        try:
            count = int(tok[2])
            idx = [int(t) for t in tok[3:]]
        except ValueError:
            raise MeshParseError(no, "non-integer tag entry") from None
        if len(idx) != count:
            raise MeshParseError(
                no, f"tag '{name}' declares {count} nodes but lists {len(idx)}"
            )
        for t in idx:
            if t < 0 or t >= n_nodes:
                raise MeshParseError(no, f"tag node index {t} out of range")
        tags[name] = np.asarray(idx, dtype=np.int64)

    try:
        return Mesh(nodes, tris, tags)
    except MeshError as exc:
        raise MeshParseError(lines[0][0], str(exc)) from exc
