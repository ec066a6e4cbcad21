"""Projected gradient descent for the confined bending-minus-area energy.

Each iteration steps along the negative shape gradient (normalized so the
step parameter equals the maximum vertex displacement), backtracks until the
energy decreases sufficiently, and projects every vertex back into the
confinement region. On a configurable cadence the mesh is remeshed toward a
target edge-length band; remeshing may change the energy slightly and is
logged separately so that accepted gradient steps remain monotone.

Divergence ("unbounded below" evidence, never proof) is declared when the
energy falls below the configured floor or the area grows beyond
AREA_BLOWUP_FACTOR times the initial area.
"""
from __future__ import annotations

import io
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from . import remesh as _remesh
from .discrete_ops import _corner_quantities, _wlambda, _wlambda_gradient_arrays, _willmore_area, _corner_areas, _vertex_areas
from .domains import Domain
from .mesh import DEGENERACY_FLOOR_FACTOR, TriMesh, require_valid, validate, metrics
from .mesh import InvalidMeshError

AREA_BLOWUP_FACTOR = 50.0
STEP_GROWTH = 1.3
STEP_SHRINK_FLOOR_REL = 1e-10  # step floor relative to mean edge length

TERMINATION_CONVERGED = "converged"
TERMINATION_MAX_ITERATIONS = "maxIterations"
TERMINATION_DIVERGENCE = "divergenceDetected"
TERMINATION_DEGENERATE = "meshDegenerate"


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 400
    initial_step: float = 0.1          # fraction of the initial mean edge length
    backtracking: float = 0.5
    sufficient_decrease: float = 1e-3
    gradient_tolerance: float = 1e-5   # relative projected-displacement stop
    energy_floor: float = -1e3
    remesh_every: int = 0              # 0 disables remeshing
    remesh_min_edge: float | None = None  # default: 0.5 x initial mean edge
    remesh_max_edge: float | None = None  # default: 2.0 x initial mean edge
    rng_seed: int = 0
    projection_mode: str = "everyStep"
    max_step_edge_factor: float = 2.0  # cap on step relative to mean edge
    vertex_budget: int = 40000
    energy_stall_tol: float = 3e-6     # relative decrease over the stall window
    energy_stall_window: int = 10

    def __post_init__(self):
        if not (0 < self.backtracking < 1):
            raise ValueError("backtracking factor must be in (0, 1)")
        if not (0 < self.sufficient_decrease < 1):
            raise ValueError("sufficient_decrease must be in (0, 1)")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if (
            self.remesh_min_edge is not None
            and self.remesh_max_edge is not None
            and not (self.remesh_min_edge < self.remesh_max_edge)
        ):
            raise ValueError("remesh edge band requires lmin < lmax")
        if self.projection_mode != "everyStep":
            raise ValueError("only projection_mode='everyStep' is supported")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    w_lambda: float
    willmore: float
    area: float
    step: float
    max_displacement: float
    projected_count: int
    remeshed: bool = False
    remesh_energy_delta: float = 0.0


@dataclass
class RunTrace:
    records: list[IterationRecord] = field(default_factory=list)
    termination: str = ""
    wall_time: float = 0.0

    CSV_HEADER = (
        "iteration,wLambda,willmore,area,step,maxDisplacement,"
        "projectedCount,remeshed,remeshEnergyDelta"
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.CSV_HEADER + "\n")
        for r in self.records:
            buf.write(
                f"{r.iteration},{r.w_lambda:.17g},{r.willmore:.17g},{r.area:.17g},"
                f"{r.step:.17g},{r.max_displacement:.17g},{r.projected_count},"
                f"{int(r.remeshed)},{r.remesh_energy_delta:.17g}\n"
            )
        return buf.getvalue()

    @property
    def final_energy(self) -> float:
        return self.records[-1].w_lambda if self.records else float("nan")


def _mean_edge_length(V: np.ndarray, F: np.ndarray) -> float:
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    return float(np.linalg.norm(V[e[:, 0]] - V[e[:, 1]], axis=1).mean())


def _mean_vertex_area(V: np.ndarray, F: np.ndarray) -> float:
    L, cot, s = _corner_quantities(V, F)
    corner, _ = _corner_areas(L, cot, s)
    return float(_vertex_areas(F, corner, len(V)).mean())


def _descent_velocity(V: np.ndarray, F: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Sobolev-preconditioned descent direction.

    The bending energy's Hessian grows like the fourth power of the mesh
    frequency, which throttles plain gradient steps to sub-edge-length sizes.
    Solving (M + l^2 L + l^4 L M^-1 L) v = grad with the cotangent Laplacian L,
    the lumped mass matrix M, and the mean edge length l damps exactly those
    stiff components, so smooth shape modes (inflation, translation of caps)
    can move at shape scale. Falls back to mass-scaled gradient when the
    solve is not a descent direction.
    """
    nv = len(V)
    L_sq, cot, s = _corner_quantities(V, F)
    corner, _ = _corner_areas(L_sq, cot, s)
    A = _vertex_areas(F, corner, nv)

    rows, cols, vals = [], [], []
    for k in range(3):
        a = F[:, (k + 1) % 3]
        b = F[:, (k + 2) % 3]
        w = 0.5 * cot[:, k]
        rows.extend((a, b))
        cols.extend((b, a))
        vals.extend((-w, -w))
        rows.extend((a, b))
        cols.extend((a, b))
        vals.extend((w, w))
    L = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nv, nv),
    )
    M = sparse.diags(A)
    ell2 = _mean_edge_length(V, F) ** 2
    P = (M + ell2 * L + (ell2**2) * (L @ sparse.diags(1.0 / A) @ L)).tocsc()
    try:
        v = splu(P).solve(grad)
    except RuntimeError:
        return grad / A.mean()
    if float(np.einsum("ij,ij->i", grad, v).sum()) <= 0.0:
        return grad / A.mean()
    return v


def minimize(
    initial: TriMesh,
    lam: float,
    domain: Domain,
    config: OptimizerConfig | None = None,
) -> tuple[TriMesh, RunTrace]:
    """Minimize W - lam * area over vertex positions inside the domain.

    The initial mesh is projected into the domain first. Returns the final
    mesh and the per-iteration trace; the energy is non-increasing across
    accepted gradient steps (remeshing deltas are logged separately).
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    config = config or OptimizerConfig()
    require_valid(initial)

    t0 = time.perf_counter()
    trace = RunTrace()

    V = np.array(initial.vertices, dtype=np.float64)
    F = np.array(initial.triangles, dtype=np.int64)
    labels = initial.labels

    projected = domain.project_many(V)
    initial_proj_count = int(
        (np.linalg.norm(projected - V, axis=1) > 1e-14 * max(initial.bbox_diagonal, 1.0)).sum()
    )
    V = projected

    area_floor = DEGENERACY_FLOOR_FACTOR * initial.bbox_diagonal**2
    edge0 = _mean_edge_length(V, F)
    lmin = config.remesh_min_edge if config.remesh_min_edge is not None else 0.5 * edge0
    lmax = config.remesh_max_edge if config.remesh_max_edge is not None else 2.0 * edge0

    W, area = _willmore_area(V, F)
    energy = W - lam * area
    area0 = area
    step = config.initial_step * edge0
    genus0 = _total_genus(V, F)

    termination = TERMINATION_MAX_ITERATIONS
    stall_count = 0
    recent_decreases: list[float] = []

    for it in range(1, config.max_iterations + 1):
        remeshed = False
        remesh_delta = 0.0
        if config.remesh_every > 0 and it % config.remesh_every == 0:
            newV, newF = _remesh.remesh(
                V, F, lmin, lmax, area_floor, vertex_budget=config.vertex_budget
            )
            newV = domain.project_many(newV)
            candidate = TriMesh(newV, newF)
            report = validate(candidate, area_floor=area_floor)
            if not report.ok or _total_genus(newV, newF) != genus0:
                termination = TERMINATION_DEGENERATE
                trace.records.append(
                    IterationRecord(it, energy, W, area, 0.0, 0.0, 0, True, 0.0)
                )
                break
            V, F = newV, newF
            labels = None  # labels do not survive retriangulation
            W_new, area_new = _willmore_area(V, F)
            remesh_delta = (W_new - lam * area_new) - energy
            W, area = W_new, area_new
            energy = W - lam * area
            remeshed = True
            edge_now = _mean_edge_length(V, F)
            step = min(step, config.max_step_edge_factor * edge_now)

        grad = _wlambda_gradient_arrays(V, F, lam)
        velocity = _descent_velocity(V, F, grad)
        vmax = float(np.abs(velocity).max())
        if vmax == 0.0:
            trace.records.append(
                IterationRecord(it, energy, W, area, 0.0, 0.0, 0, remeshed, remesh_delta)
            )
            termination = TERMINATION_CONVERGED
            break
        direction = velocity / vmax

        edge_now = _mean_edge_length(V, F)
        step = min(step, config.max_step_edge_factor * edge_now)
        step_floor = STEP_SHRINK_FLOOR_REL * edge_now

        accepted = False
        backtracked = False
        while step >= step_floor:
            V_trial = domain.project_many(V - step * direction)
            try:
                W_t, area_t = _willmore_area(V_trial, F)
            except Exception:
                step *= config.backtracking
                backtracked = True
                continue
            energy_t = W_t - lam * area_t
            predicted = float(np.einsum("ij,ij->i", grad, V - V_trial).sum())
            threshold = energy - config.sufficient_decrease * max(predicted, 0.0)
            if energy_t <= threshold and energy_t < energy:
                accepted = True
                break
            step *= config.backtracking
            backtracked = True

        if not accepted:
            trace.records.append(
                IterationRecord(it, energy, W, area, 0.0, 0.0, 0, remeshed, remesh_delta)
            )
            termination = TERMINATION_CONVERGED
            break

        displacement = np.linalg.norm(V_trial - V, axis=1)
        moved_by_projection = int(
            (
                domain.signed_distance_many(V - step * direction)
                > 1e-12 * max(edge_now, 1.0)
            ).sum()
        )
        max_disp = float(displacement.max())
        V = V_trial
        W, area, energy = W_t, area_t, energy_t
        trace.records.append(
            IterationRecord(
                it, energy, W, area, step, max_disp,
                moved_by_projection, remeshed, remesh_delta,
            )
        )

        if energy < config.energy_floor or area > AREA_BLOWUP_FACTOR * area0:
            termination = TERMINATION_DIVERGENCE
            break

        if max_disp < config.gradient_tolerance * edge_now:
            stall_count += 1
            if stall_count >= 3:
                termination = TERMINATION_CONVERGED
                break
        else:
            stall_count = 0

        recent_decreases.append(max(0.0, float(threshold - energy_t)) + max(0.0, energy - energy) )
        recent_decreases[-1] = None  # replaced below
        recent_decreases[-1] = float(trace.records[-2].w_lambda - energy) if len(trace.records) >= 2 else float("inf")
        if len(recent_decreases) > config.energy_stall_window:
            recent_decreases.pop(0)
        if (
            len(recent_decreases) == config.energy_stall_window
            and sum(recent_decreases) < config.energy_stall_tol * max(abs(energy), 1.0)
        ):
            termination = TERMINATION_CONVERGED
            break

        if not backtracked:
            step *= STEP_GROWTH

    trace.termination = termination
    trace.wall_time = time.perf_counter() - t0

    final = TriMesh(V, F, labels=labels)
    if termination != TERMINATION_DEGENERATE:
        require_valid(final)
    # keep the initial projection count visible in the first record
    if trace.records and initial_proj_count and trace.records[0].projected_count == 0:
        first = trace.records[0]
        trace.records[0] = replace(first, projected_count=initial_proj_count)
    return final, trace


def _total_genus(V: np.ndarray, F: np.ndarray) -> int:
    mesh = TriMesh(V, F)
    try:
        return int(sum(metrics(mesh).genera))
    except InvalidMeshError:
        return -1
