"""Linear thermo-elastic equilibrium for 3-node plane-stress triangles.

The element is the constant-strain triangle with one-point (exact)
integration. Thermal strain enters through the element-average of the corner
temperature differences, so both the stiffness and the thermal load are
linear in the elemental Young's modulus and the thermal load is linear in
the nodal temperatures - properties the sensitivity analysis relies on.

Dirichlet constraints are handled by reduction to free dofs; the factorized
reduced stiffness is kept on the solution handle so the adjoint solve can
reuse it without reassembly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh

RESIDUAL_RTOL = 1e-8


class FemError(Exception):
    """Assembly or solve failure."""


def _triangle_geometry(coords: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Area and the b/c shape-function gradient coefficients of one CST."""
    x, y = coords[:, 0], coords[:, 1]
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    area2 = x[0] * b[0] + x[1] * b[1] + x[2] * b[2]
    return 0.5 * area2, b, c


def _b_matrix(coords: np.ndarray) -> tuple[float, np.ndarray]:
    area, b, c = _triangle_geometry(coords)
    if area <= 1e-12:
        raise FemError(f"degenerate triangle (area {area:.3e})")
    B = np.zeros((3, 6))
    B[0, 0::2] = b
    B[1, 1::2] = c
    B[2, 0::2] = c
    B[2, 1::2] = b
    return area, B / (2.0 * area)


def plane_stress_d(e_mod: float, poisson: float) -> np.ndarray:
    """Plane-stress constitutive matrix."""
    f = e_mod / (1.0 - poisson * poisson)
    return f * np.array(
        [
            [1.0, poisson, 0.0],
            [poisson, 1.0, 0.0],
            [0.0, 0.0, 0.5 * (1.0 - poisson)],
        ]
    )


def element_stiffness(
    coords: np.ndarray, e_mod: float, poisson: float, thickness: float
) -> np.ndarray:
    """6x6 CST stiffness, dof order (u1, v1, u2, v2, u3, v3).

    Explicitly symmetrized so the assembled matrix is exactly symmetric.
    """
    area, B = _b_matrix(np.asarray(coords, dtype=float))
    D = plane_stress_d(e_mod, poisson)
    K = thickness * area * B.T @ D @ B
    return 0.5 * (K + K.T)

def element_thermal_load(
    coords: np.ndarray,
    e_mod: float,
    poisson: float,
    alpha: float,
    thickness: float,
    corner_dt: np.ndarray,
) -> np.ndarray:
    """Equivalent nodal force of the thermal strain alpha * mean(corner_dt)."""
    area, B = _b_matrix(np.asarray(coords, dtype=float))
    dt_avg = float(np.mean(corner_dt))
    eps_th = alpha * dt_avg * np.array([1.0, 1.0, 0.0])
    D = plane_stress_d(e_mod, poisson)
    return thickness * area * B.T @ (D @ eps_th)


@dataclass
class Model:
    """Thermo-elastic model state: geometry, constants, loads and the two
    identifiable fields (elemental Young's modulus, nodal temperature)."""

    mesh: Mesh
    thickness: float
    poisson: float
    alpha: float
    youngs: np.ndarray          # per element [Pa]
    delta_t: np.ndarray         # per node [degC], difference to ambient
    youngs_bounds: tuple[float, float]
    delta_t_bounds: tuple[float, float]
    dirichlet: tuple[tuple[int, int], ...]   # (node, dof) pairs fixed to zero
    f_ext: np.ndarray           # external nodal forces [N], length 2*N

    def __post_init__(self):
        self.youngs = np.asarray(self.youngs, dtype=float)
        self.delta_t = np.asarray(self.delta_t, dtype=float)
        self.f_ext = np.asarray(self.f_ext, dtype=float)
        m, n = self.mesh.n_elements, self.mesh.n_nodes
        if self.youngs.shape != (m,):
            raise FemError(f"youngs must have shape ({m},)")
        if self.delta_t.shape != (n,):
            raise FemError(f"delta_t must have shape ({n},)")
        if self.f_ext.shape != (2 * n,):
            raise FemError(f"f_ext must have shape ({2 * n},)")
        if not (0.0 <= self.poisson < 0.5):
            raise FemError(f"poisson ratio {self.poisson} outside [0, 0.5)")
        if self.alpha < 0:
            raise FemError("thermal expansion coefficient must be >= 0")
        if self.thickness <= 0:
            raise FemError("thickness must be positive")
        e_lo, e_hi = self.youngs_bounds
        t_lo, t_hi = self.delta_t_bounds
        if np.any(self.youngs < e_lo) or np.any(self.youngs > e_hi):
            raise FemError("youngs field violates its bounds")
        if np.any(self.delta_t < t_lo) or np.any(self.delta_t > t_hi):
            raise FemError("delta_t field violates its bounds")
        self.dirichlet = tuple(sorted(set(map(tuple, self.dirichlet))))
        for node, dof in self.dirichlet:
            if not (0 <= node < n) or dof not in (0, 1):
                raise FemError(f"invalid dirichlet constraint ({node}, {dof})")
        if len(self.dirichlet) < 3:
            raise FemError("need at least 3 constrained dofs (rigid-body modes)")

    def with_fields(self, youngs=None, delta_t=None) -> "Model":
        """Copy with replaced field(s); geometry and constants are shared."""
        return Model(
            mesh=self.mesh,
            thickness=self.thickness,
            poisson=self.poisson,
            alpha=self.alpha,
            youngs=self.youngs if youngs is None else youngs,
            delta_t=self.delta_t if delta_t is None else delta_t,
            youngs_bounds=self.youngs_bounds,
            delta_t_bounds=self.delta_t_bounds,
            dirichlet=self.dirichlet,
            f_ext=self.f_ext,
        )

    def fixed_mask(self) -> np.ndarray:
        mask = np.zeros(2 * self.mesh.n_nodes, dtype=bool)
        for node, dof in self.dirichlet:
            mask[2 * node + dof] = True
        return mask


@dataclass
class StiffnessHandle:
    """Factorized reduced stiffness, reusable for adjoint solves (K = K^T)."""

    matrix: sp.csc_matrix            # reduced to free dofs
    free: np.ndarray                 # free dof indices into the full vector
    n_dofs: int
    _lu: spla.SuperLU = field(repr=False, default=None)
    n_solves: int = 0

    def solve(self, rhs_full: np.ndarray) -> np.ndarray:
        """Solve K x = rhs on the free dofs; fixed dofs stay zero."""
        x = np.zeros(self.n_dofs)
        x[self.free] = self._lu.solve(rhs_full[self.free])
        self.n_solves += 1
        return x


@dataclass
class AssembledSystem:
    """Reduced stiffness and load vectors plus the free-dof map."""

    stiffness: sp.csc_matrix
    f_ext: np.ndarray
    f_dt: np.ndarray
    free: np.ndarray
    n_dofs: int

    def factorize(self) -> StiffnessHandle:
        try:
            lu = spla.splu(self.stiffness)
        except RuntimeError as exc:
            raise FemError(f"insufficient constraints: {exc}") from exc
        return StiffnessHandle(
            matrix=self.stiffness,
            free=self.free,
            n_dofs=self.n_dofs,
            _lu=lu,
        )


@dataclass
class PrimalSolution:
    """Displacement solution with the stiffness handle retained for the
    adjoint solve and with the (full-length) load vectors."""

    u: np.ndarray
    stiffness_handle: StiffnessHandle
    f_ext: np.ndarray
    f_dt: np.ndarray
    residual_norm: float


class FemOperator:
    """Precomputed geometry for fast repeated assembly and solves.

    Everything that depends only on the mesh, Poisson ratio, thickness and
    expansion coefficient is computed once: per-element unit stiffness
    (Young's modulus 1) and unit thermal load (modulus 1, mean temperature 1),
    plus the sparse assembly index arrays.
    """

    def __init__(
        self,
        mesh: Mesh,
        thickness: float,
        poisson: float,
        alpha: float,
        dirichlet: tuple[tuple[int, int], ...],
        f_ext: np.ndarray,
    ):
        self.mesh = mesh
        self.thickness = thickness
        self.poisson = poisson
        self.alpha = alpha
        self.f_ext = np.asarray(f_ext, dtype=float)
        self.n_dofs = 2 * mesh.n_nodes

        fixed = np.zeros(self.n_dofs, dtype=bool)
        for node, dof in dirichlet:
            fixed[2 * node + dof] = True
        self.free = np.flatnonzero(~fixed)
        self._free_pos = -np.ones(self.n_dofs, dtype=np.int64)
        self._free_pos[self.free] = np.arange(len(self.free))

        tris = mesh.triangles
        p = mesh.nodes[tris]                                   # (M, 3, 2)
        x, y = p[..., 0], p[..., 1]
        b = np.stack(
            [y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1
        )
        c = np.stack(
            [x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1
        )
        area = 0.5 * np.einsum("mi,mi->m", x, b)
        if np.any(area <= 1e-12):
            raise FemError("degenerate triangle in mesh")
        self.areas = area

        m = mesh.n_elements
        B = np.zeros((m, 3, 6))
        B[:, 0, 0::2] = b
        B[:, 1, 1::2] = c
        B[:, 2, 0::2] = c
        B[:, 2, 1::2] = b
        B /= (2.0 * area)[:, None, None]
        self._B = B

        D1 = plane_stress_d(1.0, poisson)
        # K_e = E_e * unit_k_e ; f_dt_e = E_e * mean(dT_e) * unit_g_e
        unit_k = np.einsum(
            "mia,ij,mjb,m->mab", B, D1, B, thickness * area, optimize=True
        )
        self.unit_k = 0.5 * (unit_k + unit_k.transpose(0, 2, 1))
        self.unit_g = (
            thickness
            * area[:, None]
            * alpha
            / (1.0 - poisson)
            * np.concatenate([b[:, :, None], c[:, :, None]], axis=2).reshape(m, 6)
            / (2.0 * area)[:, None]
        )

        dofs = np.empty((m, 6), dtype=np.int64)
        dofs[:, 0::2] = 2 * tris
        dofs[:, 1::2] = 2 * tris + 1
        self.elem_dofs = dofs
        rows = np.repeat(dofs, 6, axis=1).ravel()
        cols = np.tile(dofs, (1, 6)).ravel()
        ok = ~(fixed[rows] | fixed[cols])
        self._asm_rows = self._free_pos[rows[ok]]
        self._asm_cols = self._free_pos[cols[ok]]
        self._asm_keep = ok
        self.n_factorizations = 0

    @classmethod
    def from_model(cls, model: Model) -> "FemOperator":
        return cls(
            model.mesh,
            model.thickness,
            model.poisson,
            model.alpha,
            model.dirichlet,
            model.f_ext,
        )

    def thermal_load(self, youngs: np.ndarray, delta_t: np.ndarray) -> np.ndarray:
        """Full-length equivalent thermal force vector."""
        dt_avg = delta_t[self.mesh.triangles].mean(axis=1)
        fe = (youngs * dt_avg)[:, None] * self.unit_g
        f = np.zeros(self.n_dofs)
        np.add.at(f, self.elem_dofs.ravel(), fe.ravel())
        return f

    def assemble(
        self, youngs: np.ndarray, delta_t: np.ndarray
    ) -> AssembledSystem:
        data = (youngs[:, None, None] * self.unit_k).ravel()[self._asm_keep]
        n_free = len(self.free)
        K = sp.coo_matrix(
            (data, (self._asm_rows, self._asm_cols)), shape=(n_free, n_free)
        ).tocsc()
        f_dt = self.thermal_load(youngs, delta_t)
        return AssembledSystem(
            stiffness=K,
            f_ext=self.f_ext[self.free],
            f_dt=f_dt[self.free],
            free=self.free,
            n_dofs=self.n_dofs,
        )

    def solve(self, youngs: np.ndarray, delta_t: np.ndarray) -> PrimalSolution:
        system = self.assemble(youngs, delta_t)
        handle = system.factorize()
        self.n_factorizations += 1
        f_dt_full = np.zeros(self.n_dofs)
        f_dt_full[self.free] = system.f_dt
        rhs = np.zeros(self.n_dofs)
        rhs[self.free] = system.f_ext + system.f_dt
        u = handle.solve(rhs)

        f_free = system.f_ext + system.f_dt
        res = np.linalg.norm(system.stiffness @ u[self.free] - f_free)
        scale = np.linalg.norm(system.f_ext) + np.linalg.norm(system.f_dt) + 1.0
        if not res <= RESIDUAL_RTOL * scale:
            raise FemError(
                f"primal residual {res:.3e} exceeds {RESIDUAL_RTOL:.1e} * {scale:.3e}"
            )
        return PrimalSolution(
            u=u,
            stiffness_handle=handle,
            f_ext=self.f_ext.copy(),
            f_dt=f_dt_full,
            residual_norm=float(res),
        )

    def element_strains(self, u: np.ndarray) -> np.ndarray:
        """Per-element engineering strains (eps_x, eps_y, gamma_xy)."""
        ue = u[self.elem_dofs]
        return np.einsum("mij,mj->mi", self._B, ue)


def assemble(model: Model) -> AssembledSystem:
    """Assemble the reduced stiffness and load vectors for the model state."""
    return FemOperator.from_model(model).assemble(model.youngs, model.delta_t)


def solve_primal(model: Model) -> PrimalSolution:
    """Solve equilibrium K u = f_ext + f_dt for the current model state."""
    return FemOperator.from_model(model).solve(model.youngs, model.delta_t)


def element_stresses(model: Model, u: np.ndarray) -> np.ndarray:
    """Per-element stresses sigma = D (B u - eps_thermal), shape (M, 3)."""
    op = FemOperator.from_model(model)
    strains = op.element_strains(u)
    dt_avg = model.delta_t[model.mesh.triangles].mean(axis=1)
    strains[:, 0] -= model.alpha * dt_avg
    strains[:, 1] -= model.alpha * dt_avg
    D1 = plane_stress_d(1.0, model.poisson)
    return model.youngs[:, None] * strains @ D1.T
