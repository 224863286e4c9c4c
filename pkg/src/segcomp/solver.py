"""Positivity-preserving pseudo-time marching to steady states, plus Newton polish.

One IMEX step treats diffusion and all absorption terms (mortality and the
beta-competition) implicitly and the growth terms explicitly.  Each component
update solves an M-matrix system, so nonnegative input yields nonnegative
output regardless of beta and of the step size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import BlowUpError, SingularJacobianError, StagnationError, StepError
from .grid import Grid, ScalarField
from .model import ModelParams, params_hash, reaction_u, reaction_w


@dataclass
class FieldSet:
    """Discrete state (u, w_1..w_N); all values are kept >= 0 by the scheme."""

    u: ScalarField
    w: list[ScalarField]
    params_hash: str = ""

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, grid: Grid, u_vals, w_vals, tag: str = "") -> "FieldSet":
        return cls(ScalarField(grid, u_vals),
                   [ScalarField(grid, wv) for wv in w_vals], tag)

    @classmethod
    def constant(cls, grid: Grid, u_val: float, w_vals, tag: str = "") -> "FieldSet":
        return cls(ScalarField.constant(grid, u_val),
                   [ScalarField.constant(grid, v) for v in w_vals], tag)

    def copy(self) -> "FieldSet":
        return FieldSet(self.u.copy(), [wi.copy() for wi in self.w], self.params_hash)

    def sup(self) -> float:
        vals = [self.u.sup()] + [wi.sup() for wi in self.w]
        return max(vals)

    def min_value(self) -> float:
        return min([float(self.u.values.min())] + [float(wi.values.min()) for wi in self.w])

    def sup_diff(self, other: "FieldSet") -> float:
        d = float(np.max(np.abs(self.u.values - other.u.values)))
        for a, b in zip(self.w, other.w):
            d = max(d, float(np.max(np.abs(a.values - b.values))))
        return d

    def permuted(self, perm) -> "FieldSet":
        return FieldSet(self.u.copy(), [self.w[p].copy() for p in perm], self.params_hash)


@dataclass
class SolveSettings:
    tau: float = 0.5
    tol_residual: float = 1e-8
    tol_update: float = 1e-10
    max_steps: int = 200_000
    newton: bool = False
    linear_tol: float = 1e-10

    def __post_init__(self):
        if min(self.tau, self.tol_residual, self.tol_update, self.linear_tol) <= 0:
            raise ValueError("tau and all tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class SolveReport:
    state: FieldSet
    residual_sup: float
    steps_taken: int
    converged: bool
    wall_time: float


@dataclass
class ContinuationTrace:
    betas: list[float]
    reports: list[SolveReport]
    provenance: str = ""

    def states(self) -> list[FieldSet]:
        return [r.state for r in self.reports]


def _pcg(matvec, b, x0, diag, rtol, maxiter):
    """Jacobi-preconditioned conjugate gradients.

    The target combines a relative tolerance on ``b`` with a fixed reduction
    of the warm-start residual, so late-march updates are resolved accurately
    relative to their own (tiny) size.  Returns (x, achieved, target).
    """
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0.0
    x = x0.copy()
    r = b - matvec(x)
    r0norm = float(np.linalg.norm(r))
    # The 1e-120 floor keeps the target representable when a field has
    # decayed to extinction levels where squared residuals underflow.
    target = max(1e-15 * bnorm, min(rtol * bnorm, 0.05 * r0norm), 1e-120)
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    for _ in range(maxiter):
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return x, rnorm, target
        ap = matvec(p)
        pap = float(p @ ap)
        if pap <= 0.0 or not np.isfinite(pap):
            break  # inner products underflowed; no further progress possible
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, float(np.linalg.norm(r)), target


def _implicit_solve(grid: Grid, diff_coeff, absorb, rhs, tau, linear_tol, x0):
    """Solve ((1/tau) I - diff_coeff*Lap + diag(absorb)) x = rhs.

    The system is symmetrized with the quadrature weights, which makes it SPD.
    """
    q = grid.quad_weights
    wlap = grid.weighted_laplacian
    qc = q * (1.0 / tau + absorb)

    def matvec(x):
        return -diff_coeff * (wlap @ x) + qc * x

    diag = -diff_coeff * wlap.diagonal() + qc
    b = q * rhs
    maxiter = 20 * grid.node_count + 200
    x, rnorm, target = _pcg(matvec, b, x0, diag, linear_tol, maxiter)
    if rnorm > target * (1.0 + 1e-12):
        raise StepError("inner linear solve did not converge", worst_residual=rnorm)
    return x


def imex_step(state: FieldSet, params: ModelParams, tau: float,
              linear_tol: float = 1e-10) -> FieldSet:
    """One linearly implicit update; preserves componentwise nonnegativity."""
    grid = state.grid
    u_old = state.u.values
    w_old = [wi.values for wi in state.w]

    new_w = []
    for i in range(params.N):
        absorb = np.full(grid.node_count, params.omega[i])
        for j in range(params.N):
            if j != i:
                absorb = absorb + params.beta * params.a[i, j] * w_old[j]
        rhs = (1.0 / tau + params.k[i] * u_old) * w_old[i]
        x = _implicit_solve(grid, params.d[i], absorb, rhs, tau, linear_tol, w_old[i])
        new_w.append(_clip_roundoff_negatives(x, rhs, linear_tol))

    absorb_u = params.mu * u_old
    for i in range(params.N):
        absorb_u = absorb_u + params.k[i] * w_old[i]
    rhs_u = (1.0 / tau + params.lam) * u_old
    x = _implicit_solve(grid, params.D, absorb_u, rhs_u, tau, linear_tol, u_old)
    new_u = _clip_roundoff_negatives(x, rhs_u, linear_tol)

    return FieldSet.from_arrays(grid, new_u, new_w, params_hash(params))


def _clip_roundoff_negatives(x, rhs, linear_tol):
    # M-matrix structure guarantees x >= 0 in exact arithmetic; iterative
    # round-off may leave tiny negatives, which are clamped.
    guard = 1e3 * linear_tol * (1.0 + float(np.max(np.abs(rhs))))
    lowest = float(x.min())
    if lowest < -guard:
        raise StepError(f"negative update beyond round-off guard: {lowest:g}")
    if lowest < 0.0:
        x = np.maximum(x, 0.0)
    return x


def residual_fields(state: FieldSet, params: ModelParams) -> list[np.ndarray]:
    """Signed stationary residuals (time-derivative fields), w components then u."""
    grid = state.grid
    lap = grid.laplacian_matrix
    u = state.u.values
    w = [wi.values for wi in state.w]
    out = []
    for i in range(params.N):
        out.append(params.d[i] * (lap @ w[i]) + reaction_w(i, u, w, params))
    out.append(params.D * (lap @ u) + reaction_u(u, w, params))
    return out


def residual_norm(state: FieldSet, params: ModelParams) -> float:
    """Sup norm over nodes and components of the stationary residual."""
    return max(float(np.max(np.abs(r))) for r in residual_fields(state, params))


def _blowup_guard(params: ModelParams) -> float:
    return 10.0 * (params.delta ** -6 + params.lam / params.mu)


def march_to_steady(initial: FieldSet, params: ModelParams,
                    settings: SolveSettings | None = None,
                    observer=None) -> SolveReport:
    """Iterate IMEX steps until the stationary residual and update both settle.

    ``observer(step, state)`` is called after every step when given; raising
    StopIteration from it terminates the march early (used by probes).
    """
    settings = settings or SolveSettings()
    guard = _blowup_guard(params)
    t0 = time.perf_counter()
    state = initial.copy()
    residual = residual_norm(state, params)
    steps = 0
    converged = residual <= settings.tol_residual
    while not converged and steps < settings.max_steps:
        new_state = imex_step(state, params, settings.tau, settings.linear_tol)
        change = new_state.sup_diff(state)
        state = new_state
        steps += 1
        if state.sup() > guard:
            raise BlowUpError(
                f"blow-up suspected: sup state {state.sup():g} exceeds guard {guard:g}"
            )
        residual = residual_norm(state, params)
        converged = (residual <= settings.tol_residual
                     and change / settings.tau <= settings.tol_update)
        if observer is not None:
            try:
                observer(steps, state)
            except StopIteration:
                break
    return SolveReport(state, residual, steps, converged,
                       time.perf_counter() - t0)


def _assemble_jacobian(state: FieldSet, params: ModelParams) -> sp.csr_matrix:
    grid = state.grid
    lap = grid.laplacian_matrix
    n = grid.node_count
    u = state.u.values
    w = [wi.values for wi in state.w]
    nsp = params.N
    blocks = [[None] * (nsp + 1) for _ in range(nsp + 1)]
    for i in range(nsp):
        g = -params.omega[i] + params.k[i] * u
        for j in range(nsp):
            if j != i:
                g = g - params.beta * params.a[i, j] * w[j]
        blocks[i][i] = -params.d[i] * lap - sp.diags(g)
        for j in range(nsp):
            if j != i:
                blocks[i][j] = sp.diags(params.beta * params.a[i, j] * w[i])
        blocks[i][nsp] = sp.diags(-params.k[i] * w[i])
    graze = np.zeros(n)
    for i in range(nsp):
        graze = graze + params.k[i] * w[i]
        blocks[nsp][i] = sp.diags(params.k[i] * u)
    blocks[nsp][nsp] = -params.D * lap - sp.diags(params.lam - 2 * params.mu * u - graze)
    return sp.bmat(blocks, format="csr")


def newton_refine(state: FieldSet, params: ModelParams,
                  settings: SolveSettings | None = None) -> SolveReport:
    """Damped Newton on the discrete stationary system; never accepts negatives."""
    settings = settings or SolveSettings()
    t0 = time.perf_counter()
    grid = state.grid
    n = grid.node_count
    current = state.copy()
    residual = residual_norm(current, params)
    iterations = 0
    while residual > settings.tol_residual and iterations < 50:
        f_stat = np.concatenate(residual_fields(current, params))
        jac = _assemble_jacobian(current, params)
        delta = spsolve(jac.tocsc(), f_stat)
        if not np.all(np.isfinite(delta)):
            raise SingularJacobianError(
                f"singular Jacobian at iteration {iterations} (residual {residual:g})"
            )
        step = 1.0
        accepted = None
        for _ in range(31):
            trial_vec = _state_vector(current) + step * delta
            trial = _vector_state(trial_vec, grid, params, current.params_hash)
            trial_res = residual_norm(trial, params)
            if trial_res < residual:
                accepted = (trial, trial_res)
                break
            step /= 2.0
        if accepted is None:
            raise StagnationError(
                f"stagnation: residual {residual:g} not reduced after 30 halvings"
            )
        current, residual = accepted
        iterations += 1
    return SolveReport(current, residual, iterations,
                       residual <= settings.tol_residual,
                       time.perf_counter() - t0)


def _state_vector(state: FieldSet) -> np.ndarray:
    return np.concatenate([wi.values for wi in state.w] + [state.u.values])


def _vector_state(vec, grid, params, tag) -> FieldSet:
    n = grid.node_count
    # negatives are projected out; Newton iterates must stay in the cone
    vec = np.maximum(vec, 0.0)
    w = [vec[i * n:(i + 1) * n] for i in range(params.N)]
    return FieldSet.from_arrays(grid, vec[params.N * n:], w, tag)


def continue_in_beta(initial: FieldSet, params: ModelParams, beta_schedule,
                     settings: SolveSettings | None = None) -> ContinuationTrace:
    """Warm-started marching along a strictly increasing beta schedule."""
    schedule = [float(b) for b in beta_schedule]
    if not schedule:
        raise ValueError("beta schedule must be nonempty")
    if any(b2 <= b1 for b1, b2 in zip(schedule, schedule[1:])):
        raise ValueError("beta schedule must be strictly increasing")
    settings = settings or SolveSettings()
    reports = []
    state = initial
    for beta in schedule:
        p = params.with_beta(beta)
        report = march_to_steady(state, p, settings)
        if settings.newton and report.converged:
            report = newton_refine(report.state, p, settings)
        reports.append(report)
        state = report.state
    return ContinuationTrace(schedule, reports,
                             provenance=f"warm-start from {initial.params_hash or 'initial'}")
