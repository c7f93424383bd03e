"""First-order identification drivers.

Both drivers take normalized-direction steps with Barzilai-Borwein step
lengths capped at a maximum: the search direction is the negative gradient
scaled by its L2 norm, the step length comes from the previous
(control change, gradient change) secant pair and falls back to the cap on
the first iteration or whenever the BB value is non-finite or non-positive.
No line search is performed; the BB method's non-monotone cost spikes are
expected and accepted.

The monolithic driver updates both control fields every iteration against
the composite cost. The partitioned driver runs a Gauss-Seidel fixed-point
outer loop over two deliberately inexact sub-optimizations: 'A' updates the
temperature controls against the composite cost, 'B' updates the stiffness
controls against the displacement cost only, each stopped early at a
fractional cost reduction or a small iteration cap, with optional relaxation
of the control updates in between.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import adjoint as adj
from . import fem
from . import sensors as sens
from .filtering import ControlState, FieldChain
from .objective import CostBreakdown, cost_from_samples


class OptimizeError(Exception):
    """Driver configuration or execution failure."""


@dataclass(frozen=True)
class OptimizerConfig:
    """First-order update settings shared by both drivers."""

    algorithm: str = "steepest_bb"       # or "momentum_bb"
    max_step: float = 2.0                # control-space step-length cap
    max_iters: int = 2000
    target_value: float | None = None        # absolute cost target
    target_reduction: float | None = 1e-6    # relative to the initial cost
    bb_variant: str = "bb1"
    momentum: float = 0.9                # only used by momentum_bb

    def __post_init__(self):
        if self.max_step <= 0:
            raise OptimizeError("max_step must be positive")
        if self.max_iters < 1:
            raise OptimizeError("max_iters must be >= 1")
        if self.algorithm not in ("steepest_bb", "momentum_bb"):
            raise OptimizeError(f"unknown algorithm '{self.algorithm}'")
        if self.bb_variant not in ("bb1", "bb2"):
            raise OptimizeError(f"unknown bb variant '{self.bb_variant}'")

    def resolve_target(self, j0: float) -> float:
        if self.target_value is not None:
            return self.target_value
        if self.target_reduction is not None:
            return self.target_reduction * j0
        return 0.0


@dataclass(frozen=True)
class CouplingConfig:
    """Gauss-Seidel outer loop settings for the partitioned driver."""

    beta: float = 1.0                    # relaxation, beta = 1 disables it
    inner_reduction: float = 0.2         # stop inner solve at this fractional drop
    inner_max_iters: int = 10
    outer_max_iters: int = 4000          # budget on total inner iterations

    def __post_init__(self):
        if not (0.0 < self.beta < 2.0):
            raise OptimizeError("relaxation beta must lie in (0, 2)")
        if not (0.0 < self.inner_reduction < 1.0):
            raise OptimizeError("inner_reduction must lie in (0, 1)")
        if self.inner_max_iters < 1 or self.outer_max_iters < 1:
            raise OptimizeError("iteration budgets must be >= 1")


def bb_step_size(s: np.ndarray, y: np.ndarray, variant: str) -> float | None:
    """Barzilai-Borwein step length from a secant pair, or None when the
    curvature information is unusable (non-finite or non-positive)."""
    sy = float(np.dot(s, y))
    if variant == "bb1":
        num, den = float(np.dot(s, s)), sy
    else:
        num, den = sy, float(np.dot(y, y))
    if den <= 0.0 or not np.isfinite(den) or not np.isfinite(num):
        return None
    gamma = num / den
    if not np.isfinite(gamma) or gamma <= 0.0:
        return None
    return gamma


def descent_step(
    gradient: np.ndarray,
    secant: tuple[np.ndarray, np.ndarray] | None,
    cfg: OptimizerConfig,
) -> tuple[np.ndarray, float, bool]:
    """Step vector along the L2-normalized negative gradient.

    Returns (step_vector, step_length, stationary). The BB coefficient
    multiplies the raw gradient (so the scheme stays exact on quadratics);
    the length of that step along the normalized direction is capped at
    ``max_step``. Without usable secant information the step length is
    exactly ``max_step``. A zero gradient yields a zero step and the
    stationary flag.
    """
    gnorm = float(np.linalg.norm(gradient))
    if gnorm == 0.0:
        return np.zeros_like(gradient), 0.0, True
    length = cfg.max_step
    if secant is not None:
        bb = bb_step_size(secant[0], secant[1], cfg.bb_variant)
        if bb is not None:
            length = min(bb * gnorm, cfg.max_step)
    return -(length / gnorm) * gradient, length, False


class _FieldUpdater:
    """Per-field update state: secant history and momentum velocity."""

    def __init__(self, cfg: OptimizerConfig):
        self.cfg = cfg
        self.prev_control: np.ndarray | None = None
        self.prev_grad: np.ndarray | None = None
        self.velocity: np.ndarray | None = None

    def apply(self, control: np.ndarray, gradient: np.ndarray):
        """Returns (new_control, step_length, stationary)."""
        secant = None
        if self.prev_control is not None:
            s = control - self.prev_control
            y = gradient - self.prev_grad
            if np.any(s != 0.0):
                secant = (s, y)
        step, gamma, stationary = descent_step(gradient, secant, self.cfg)
        if self.cfg.algorithm == "momentum_bb" and not stationary:
            if self.velocity is None:
                self.velocity = np.zeros_like(control)
            self.velocity = self.cfg.momentum * self.velocity + step
            step = self.velocity
        self.prev_control = control.copy()
        self.prev_grad = gradient.copy()
        return control + step, gamma if not stationary else 0.0, stationary


@dataclass
class IterationRow:
    iteration: int
    subproblem: str     # "mono" | "A" | "B"
    j_total: float
    j_disp: float
    j_temp: float
    step_e: float
    step_t: float


@dataclass
class RunRecord:
    """Per-iteration history plus the final state of an identification run."""

    rows: list[IterationRow] = field(default_factory=list)
    final_controls: ControlState | None = None
    final_youngs: np.ndarray | None = None
    final_delta_t: np.ndarray | None = None
    converged: bool = False
    coupling_iterations: int = 0
    primal_solves: int = 0
    adjoint_solves: int = 0

    @property
    def iterations(self) -> int:
        return len(self.rows)

    def append(self, row: IterationRow):
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise OptimizeError("iteration indices must strictly increase")
        self.rows.append(row)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["iter", "subproblem", "J", "J_D", "J_T", "step_E", "step_T"])
        for r in self.rows:
            writer.writerow(
                [
                    r.iteration,
                    r.subproblem,
                    repr(r.j_total),
                    repr(r.j_disp),
                    repr(r.j_temp),
                    repr(r.step_e),
                    repr(r.step_t),
                ]
            )
        return out.getvalue()


@dataclass
class EvalResult:
    cost: CostBreakdown
    objective: float                 # the cost the driver minimizes
    grad_e: np.ndarray | None
    grad_t: np.ndarray | None


class IdentificationProblem:
    """Wires the model, sensors, measurements and control chains into a
    differentiable objective over the control state.

    ``identify`` names the active fields ("e", "t"); an inactive temperature
    field keeps ``fixed_delta_t`` throughout (comparison scenarios). When
    ``use_temp_cost`` is false the temperature term is still reported but
    does not drive the objective or its gradient.
    """

    def __init__(
        self,
        base_model: fem.Model,
        sensor_set: sens.SensorSet,
        measurements: sens.Measurements,
        chain_e: FieldChain,
        chain_t: FieldChain | None = None,
        fixed_delta_t: np.ndarray | None = None,
        identify: tuple[str, ...] = ("e", "t"),
        use_temp_cost: bool = True,
    ):
        if "t" in identify and chain_t is None:
            raise OptimizeError("temperature identification needs chain_t")
        if "t" not in identify and fixed_delta_t is None:
            raise OptimizeError("non-identified temperature needs fixed_delta_t")
        self.base_model = base_model
        self.sensors = sensor_set
        self.measurements = measurements
        self.chain_e = chain_e
        self.chain_t = chain_t
        self.fixed_delta_t = fixed_delta_t
        self.identify = tuple(identify)
        self.use_temp_cost = use_temp_cost
        self.operator = fem.FemOperator.from_model(base_model)
        self.primal_solves = 0
        self.adjoint_solves = 0

    def initial_state(
        self, youngs_init: float, delta_t_init: float
    ) -> ControlState:
        """Uniform-field start: controls whose physical image is uniform."""
        s_e = np.full(
            self.base_model.mesh.n_elements,
            self.chain_e.uniform_control(youngs_init),
        )
        if self.chain_t is not None:
            s_t = np.full(
                self.base_model.mesh.n_nodes,
                self.chain_t.uniform_control(delta_t_init),
            )
        else:
            s_t = np.zeros(0)
        return ControlState(s_e=s_e, s_t=s_t)

    def physical_fields(self, state: ControlState):
        youngs = self.chain_e.to_physical(state.s_e)
        if "t" in self.identify:
            delta_t = self.chain_t.to_physical(state.s_t)
        else:
            delta_t = self.fixed_delta_t
        return youngs, delta_t

    def evaluate(
        self, state: ControlState, fields: tuple[str, ...] | None = None
    ) -> EvalResult:
        """One primal solve, the cost, one adjoint solve and the control-space
        gradients for the requested fields."""
        fields = self.identify if fields is None else fields
        youngs, delta_t = self.physical_fields(state)
        model = self.base_model.with_fields(youngs=youngs, delta_t=delta_t)

        primal = self.operator.solve(youngs, delta_t)
        self.primal_solves += 1
        u_comp = sens.sample_displacements(self.sensors, primal.u)
        dt_comp = sens.sample_temperatures(self.sensors, delta_t)
        breakdown = cost_from_samples(self.sensors, self.measurements, u_comp, dt_comp)
        objective = breakdown.j_disp + (
            breakdown.j_temp if self.use_temp_cost else 0.0
        )

        rhs = -adj.cost_u_gradient(self.sensors, self.measurements, u_comp)
        adjoint_sol = adj.solve_adjoint(primal.stiffness_handle, rhs)
        self.adjoint_solves += 1

        grad_se = None
        grad_st = None
        if "e" in fields:
            d_young = adj.grad_e(model, primal, adjoint_sol, self.operator)
            grad_se = self.chain_e.gradient(state.s_e, d_young)
        if "t" in fields:
            d_temp = adj.grad_t(
                model,
                primal,
                adjoint_sol,
                self.sensors,
                self.measurements,
                self.operator,
                include_direct=self.use_temp_cost,
            )
            grad_st = self.chain_t.gradient(state.s_t, d_temp)
        return EvalResult(
            cost=breakdown, objective=objective, grad_e=grad_se, grad_t=grad_st
        )

    def finalize(self, record: RunRecord, state: ControlState):
        youngs, delta_t = self.physical_fields(state)
        record.final_controls = state.copy()
        record.final_youngs = youngs
        record.final_delta_t = np.asarray(delta_t).copy()
        record.primal_solves = self.primal_solves
        record.adjoint_solves = self.adjoint_solves


def run_monolithic(
    problem: IdentificationProblem,
    cfg: OptimizerConfig,
    state: ControlState,
) -> RunRecord:
    """Single-loop identification: every iteration solves the primal and
    adjoint problems once and updates all active control fields jointly."""
    record = RunRecord()
    state = state.copy()
    updaters = {name: _FieldUpdater(cfg) for name in problem.identify}
    target = None
    r = 0
    while r < cfg.max_iters:
        res = problem.evaluate(state)
        if target is None:
            target = cfg.resolve_target(res.objective)
        if res.objective <= target:
            record.append(
                IterationRow(r, "mono", res.cost.j_total, res.cost.j_disp,
                             res.cost.j_temp, 0.0, 0.0)
            )
            record.converged = True
            break
        step_e = step_t = 0.0
        stationary = []
        if "e" in problem.identify:
            state.s_e, step_e, st = updaters["e"].apply(state.s_e, res.grad_e)
            stationary.append(st)
        if "t" in problem.identify:
            state.s_t, step_t, st = updaters["t"].apply(state.s_t, res.grad_t)
            stationary.append(st)
        record.append(
            IterationRow(r, "mono", res.cost.j_total, res.cost.j_disp,
                         res.cost.j_temp, step_e, step_t)
        )
        r += 1
        if stationary and all(stationary):
            record.converged = True
            break
    problem.finalize(record, state)
    return record


def _inner_solve(
    problem: IdentificationProblem,
    state: ControlState,
    field_name: str,
    cfg: OptimizerConfig,
    coupling: CouplingConfig,
    record: RunRecord,
    iteration_offset: int,
    outer_target: list,
) -> int:
    """One inexact sub-optimization over a single field. Returns the number
    of iterations spent. Mutates ``state`` in place and appends rows."""
    updater = _FieldUpdater(cfg)
    label = "A" if field_name == "t" else "B"
    j_start = None
    spent = 0
    while spent < coupling.inner_max_iters:
        res = problem.evaluate(state, fields=(field_name,))
        j_obj = (
            res.cost.j_disp + res.cost.j_temp
            if field_name == "t"
            else res.cost.j_disp
        )
        if outer_target[0] is None:
            outer_target[0] = cfg.resolve_target(res.cost.j_total)
        if j_start is None:
            j_start = j_obj
        row_iter = iteration_offset + spent
        if spent > 0 and j_obj <= (1.0 - coupling.inner_reduction) * j_start:
            record.append(
                IterationRow(row_iter, label, res.cost.j_total,
                             res.cost.j_disp, res.cost.j_temp, 0.0, 0.0)
            )
            spent += 1
            break
        grad = res.grad_t if field_name == "t" else res.grad_e
        control = state.s_t if field_name == "t" else state.s_e
        new_control, gamma, stationary = updater.apply(control, grad)
        if field_name == "t":
            state.s_t = new_control
            step_e, step_t = 0.0, gamma
        else:
            state.s_e = new_control
            step_e, step_t = gamma, 0.0
        record.append(
            IterationRow(row_iter, label, res.cost.j_total,
                         res.cost.j_disp, res.cost.j_temp, step_e, step_t)
        )
        spent += 1
        if stationary:
            break
    return spent


def run_partitioned(
    problem: IdentificationProblem,
    coupling: CouplingConfig,
    cfg: OptimizerConfig,
    state: ControlState,
) -> RunRecord:
    """Gauss-Seidel partitioned identification.

    Each coupling iteration runs sub-problem A (temperature controls, composite
    cost) and sub-problem B (stiffness controls, displacement cost), both
    stopped early by the loose inner criteria, with relaxation applied to each
    field's control update. A coupling iteration is never interrupted, so the
    total iteration count may overshoot the budget by at most one coupling
    iteration.
    """
    if set(problem.identify) != {"e", "t"}:
        raise OptimizeError("partitioned driver identifies both fields")
    record = RunRecord()
    state = state.copy()
    outer_target = [None]
    r = 0
    while r < coupling.outer_max_iters:
        s_t_before = state.s_t.copy()
        spent_a = _inner_solve(
            problem, state, "t", cfg, coupling, record, r, outer_target
        )
        r += spent_a
        state.s_t = coupling.beta * state.s_t + (1.0 - coupling.beta) * s_t_before

        s_e_before = state.s_e.copy()
        spent_b = _inner_solve(
            problem, state, "e", cfg, coupling, record, r, outer_target
        )
        r += spent_b
        state.s_e = coupling.beta * state.s_e + (1.0 - coupling.beta) * s_e_before

        record.coupling_iterations += 1
        last = record.rows[-1]
        if last.j_disp + last.j_temp <= outer_target[0]:
            record.converged = True
            break
    problem.finalize(record, state)
    return record


def stationarity_report(record: RunRecord) -> dict:
    """Exit summary: final costs, iteration counts and the dominant term."""
    if not record.rows:
        return {}
    last = record.rows[-1]
    dominant = "displacement" if last.j_disp >= last.j_temp else "temperature"
    report = {
        "iterations": record.iterations,
        "final_j": last.j_total,
        "final_j_disp": last.j_disp,
        "final_j_temp": last.j_temp,
        "dominant_term": dominant,
        "converged": record.converged,
    }
    if record.coupling_iterations:
        report["coupling_iterations"] = record.coupling_iterations
    return report
