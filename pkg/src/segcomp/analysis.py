"""Diagnostics for computed steady states: bounds, segregation, supports,
restricted eigenvalues, decay fits, complementarity and survivor counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, IsolationViolation
from .grid import (Grid, ScalarField, SupportMask, ball_nodes, grad_inner,
                   integrate, lambda1_restricted)
from .model import ModelParams, derived_constants, nhat_bound
from .solver import (ContinuationTrace, FieldSet, SolveSettings, imex_step,
                     march_to_steady, residual_norm)

_PAIR_SEED = 1729


# ---------------------------------------------------------------------------
# sup-norm bounds

@dataclass
class BoundReport:
    u_max: float
    u_cap: float
    s_max: float
    s_cap: float
    wsum_max: float
    wsum_cap: float
    u_pass: bool
    s_pass: bool
    wsum_pass: bool

    @property
    def all_pass(self) -> bool:
        return self.u_pass and self.s_pass and self.wsum_pass


def check_linf_bounds(state: FieldSet, params: ModelParams) -> BoundReport:
    """Compare sup(u), sup(D u + sum d_i w_i) and sup(sum w_i) to their caps."""
    consts = derived_constants(params)
    u_max = float(np.max(state.u.values))
    s_field = params.D * state.u.values.copy()
    wsum = np.zeros_like(s_field)
    for i, wi in enumerate(state.w):
        s_field = s_field + params.d[i] * wi.values
        wsum = wsum + wi.values
    s_max = float(np.max(s_field))
    wsum_max = float(np.max(wsum))

    def ok(value, cap):
        return value <= cap + 1e-6 * cap

    return BoundReport(
        u_max=u_max, u_cap=consts.u_cap,
        s_max=s_max, s_cap=consts.s_cap,
        wsum_max=wsum_max, wsum_cap=consts.wsum_cap,
        u_pass=ok(u_max, consts.u_cap),
        s_pass=ok(s_max, consts.s_cap),
        wsum_pass=ok(wsum_max, consts.wsum_cap),
    )


# ---------------------------------------------------------------------------
# Hoelder seminorms

def _pair_indices(n: int, grid: Grid, max_pairs: int):
    if n * n <= max_pairs:
        ii, jj = np.triu_indices(n, k=1)
        return ii, jj
    # deterministic subsample: all axis-adjacent pairs (capture local steepness)
    # plus a seeded uniform draw of long-range pairs
    rng = np.random.default_rng(_PAIR_SEED)
    adj_i, adj_j = [], []
    if grid.dim == 1:
        idx = np.arange(n - 1)
        adj_i.append(idx)
        adj_j.append(idx + 1)
    else:
        nx, ny = grid.counts
        node = np.arange(n).reshape(nx, ny)
        adj_i.append(node[:-1, :].ravel())
        adj_j.append(node[1:, :].ravel())
        adj_i.append(node[:, :-1].ravel())
        adj_j.append(node[:, 1:].ravel())
    adj_i = np.concatenate(adj_i)
    adj_j = np.concatenate(adj_j)
    n_random = max(max_pairs - adj_i.size, 0)
    ri = rng.integers(0, n, size=n_random)
    rj = rng.integers(0, n, size=n_random)
    return np.concatenate([adj_i, ri]), np.concatenate([adj_j, rj])


def holder_seminorm(field: ScalarField, alpha: float,
                    max_pairs: int = 200_000) -> float:
    """Max of |f(x)-f(y)| / |x-y|^alpha over node pairs (sampled when large)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    n = field.grid.node_count
    xy = field.grid.coords()
    ii, jj = _pair_indices(n, field.grid, max_pairs)
    dist = np.linalg.norm(xy[ii] - xy[jj], axis=1)
    keep = dist > 0
    if not np.any(keep):
        return 0.0
    diff = np.abs(field.values[ii][keep] - field.values[jj][keep])
    return float(np.max(diff / dist[keep] ** alpha))


def weighted_sum_holder(state: FieldSet, weights, alpha: float, delta: float,
                        max_pairs: int = 200_000) -> float:
    """Hoelder seminorm of ``sum_i weights_i w_i`` for weights in [delta, 1/delta]."""
    weights = np.asarray(weights, dtype=float)
    if weights.size != len(state.w):
        raise ValueError("need one weight per component")
    if np.any(weights < delta) or np.any(weights > 1.0 / delta):
        raise AdmissibilityError("weights must lie in [delta, 1/delta]")
    combined = np.zeros(state.grid.node_count)
    for wgt, wi in zip(weights, state.w):
        combined = combined + wgt * wi.values
    return holder_seminorm(ScalarField(state.grid, combined), alpha, max_pairs)


# ---------------------------------------------------------------------------
# segregation overlaps

@dataclass
class SegregationReport:
    overlap: np.ndarray          # (i, j) -> int w_i w_j
    scaled_overlap: np.ndarray   # beta * overlap
    interaction_mass: np.ndarray  # per component: beta int w_i sum_{j!=i} a_ij w_j

    def max_offdiag_overlap(self) -> float:
        n = self.overlap.shape[0]
        if n < 2:
            return 0.0
        off = ~np.eye(n, dtype=bool)
        return float(np.max(self.overlap[off]))


def segregation_report(state: FieldSet, params: ModelParams) -> SegregationReport:
    n = params.N
    overlap = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            overlap[i, j] = overlap[j, i] = integrate(
                ScalarField(state.grid, state.w[i].values * state.w[j].values))
    mass = np.zeros(n)
    for i in range(n):
        cross = np.zeros(state.grid.node_count)
        for j in range(n):
            if j != i:
                cross = cross + params.a[i, j] * state.w[j].values
        mass[i] = params.beta * integrate(
            ScalarField(state.grid, state.w[i].values * cross))
    return SegregationReport(overlap, params.beta * overlap, mass)


# ---------------------------------------------------------------------------
# supports and nodal set

@dataclass
class SupportReport:
    threshold: float
    supports: list[SupportMask]
    nodal: SupportMask
    measures: list[float]


def default_threshold(state: FieldSet) -> float:
    """Relative support threshold: 1% of the largest component amplitude."""
    top = max((wi.sup() for wi in state.w), default=0.0)
    return 0.01 * top if top > 0 else 0.01


def support_and_nodal(state: FieldSet, threshold: float) -> SupportReport:
    """Per-component masks {w_i > threshold}, the common small set, and measures."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    grid = state.grid
    q = grid.quad_weights
    supports, measures = [], []
    nodal_flags = np.ones(grid.node_count, dtype=bool)
    for wi in state.w:
        flags = wi.values > threshold
        supports.append(SupportMask(grid, flags))
        measures.append(float(np.sum(q[flags])))
        nodal_flags &= ~flags
    return SupportReport(threshold, supports, SupportMask(grid, nodal_flags), measures)


# ---------------------------------------------------------------------------
# restricted first-eigenvalue inequality

@dataclass
class EigenvalueRecord:
    component: int
    lambda1: float
    cap: float
    passed: bool


def faber_krahn_check(state: FieldSet, params: ModelParams, threshold: float,
                      allowance: float = 0.10) -> list[EigenvalueRecord]:
    """Restricted lambda_1 on each nonempty support versus its closed-form cap.

    The cap is (lambda k_i - mu omega_i) / (d_i mu); a 10% discretization
    allowance is granted because thresholded supports perturb the eigenvalue.
    """
    report = support_and_nodal(state, threshold)
    out = []
    for i, mask in enumerate(report.supports):
        if mask.count() == 0:
            continue
        lam1 = lambda1_restricted(mask, state.grid)
        cap = (params.lam * params.k[i] - params.mu * params.omega[i]) / (params.d[i] * params.mu)
        out.append(EigenvalueRecord(i, lam1, cap, lam1 <= (1.0 + allowance) * cap))
    return out


# ---------------------------------------------------------------------------
# exponential decay of the competitors inside a territory

@dataclass
class DecayFit:
    center: tuple
    rho: float
    betas: list[float]
    sup_h: list[float]
    slope: float
    r_squared: float
    fully_segregated: bool = False


def decay_fit(trace: ContinuationTrace, component: int, center, rho: float,
              diffusivities=None, center_floor: float = 0.05) -> DecayFit:
    """Fit log(sup of competitor mass near ``center``) against sqrt(beta).

    ``sup_h`` records, per trace entry, the maximum over the ball of radius
    ``rho/2`` of ``sum_{j != component} d_j w_j``; the component itself must
    stay above ``center_floor`` at the center node for the fit to make sense.
    ``diffusivities`` defaults to all ones.
    """
    if len(trace.betas) < 3:
        raise ValueError("need at least 3 trace entries for a decay fit")
    grid = trace.reports[0].state.grid
    n_comp = len(trace.reports[0].state.w)
    dvec = (np.ones(n_comp) if diffusivities is None
            else np.asarray(diffusivities, dtype=float))
    center = np.atleast_1d(np.asarray(center, dtype=float))
    node = int(np.argmin(np.linalg.norm(grid.coords() - center[None, :], axis=1)))
    ball = ball_nodes(grid, center, rho / 2.0)
    idx = np.flatnonzero(ball.flags)

    sup_h = []
    for beta, rep in zip(trace.betas, trace.reports):
        state = rep.state
        if state.w[component].values[node] < center_floor:
            raise ValueError(
                f"component {component} fell below {center_floor:g} at center for beta={beta:g}")
        h = np.zeros(grid.node_count)
        for j, wj in enumerate(state.w):
            if j != component:
                h = h + dvec[j] * wj.values
        sup_h.append(float(np.max(h[idx])) if idx.size else 0.0)

    xs = np.sqrt(np.asarray(trace.betas))
    ys = np.asarray(sup_h)
    positive = ys > 0
    if np.count_nonzero(positive) < 2:
        return DecayFit(tuple(center), rho, list(trace.betas), sup_h,
                        slope=-math.inf, r_squared=float("nan"),
                        fully_segregated=True)
    x = xs[positive]
    y = np.log(ys[positive])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(tuple(center), rho, list(trace.betas), sup_h,
                    slope=float(slope), r_squared=r2)


# ---------------------------------------------------------------------------
# complementarity inequalities

@dataclass
class ComplementarityRecord:
    component: int
    test_index: int
    kind: str           # "subsolution" or "difference"
    lhs: float
    rhs: float
    margin: float
    tol: float
    passed: bool


@dataclass
class ComplementarityReport:
    records: list[ComplementarityRecord]
    worst_margin: float

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.records)


def cosine_test_functions(grid: Grid, count: int) -> list[ScalarField]:
    """Deterministic nonnegative tensor cosine bumps with no-flux closure."""
    out = []
    if grid.dim == 1:
        lx = grid.extents[0]
        x = grid.axis_coords(0)
        for m in range(count):
            out.append(ScalarField(grid, 0.5 * (1.0 + np.cos(m * np.pi * x / lx))))
    else:
        lx, ly = grid.extents
        x, y = np.meshgrid(grid.axis_coords(0), grid.axis_coords(1), indexing="ij")
        modes = [(mx, my) for s in range(20) for mx in range(s + 1)
                 for my in [s - mx]]
        for mx, my in modes[:count]:
            vals = (0.25 * (1.0 + np.cos(mx * np.pi * x / lx))
                    * (1.0 + np.cos(my * np.pi * y / ly)))
            out.append(ScalarField(grid, vals.ravel()))
    return out


def complementarity_check(state: FieldSet, params: ModelParams,
                          test_functions) -> ComplementarityReport:
    """Evaluate both weak inequalities of the segregated limit for each pair.

    subsolution:  int d_i grad w_i . grad eta  <=  int (-omega_i + k_i u) w_i eta
    difference:   int grad(d_i w_i - sum_j d_j w_j) . grad eta
                  >=  int [(-omega_i + k_i u) w_i - sum_j (-omega_j + k_j u) w_j] eta
    """
    grid = state.grid
    u = state.u.values
    state_scale = max(state.sup(), 1e-300)
    records = []
    for t_idx, eta in enumerate(test_functions):
        if np.any(eta.values < 0):
            raise ValueError(f"test function {t_idx} has negative values")
        tol = 1e-4 * state_scale * max(eta.sup(), 1e-300)
        for i in range(params.N):
            w_i = state.w[i]
            react_i = (-params.omega[i] + params.k[i] * u) * w_i.values

            lhs = params.d[i] * grad_inner(w_i, eta)
            rhs = integrate(ScalarField(grid, react_i * eta.values))
            margin = rhs - lhs
            records.append(ComplementarityRecord(i, t_idx, "subsolution",
                                                 lhs, rhs, margin, tol,
                                                 margin >= -tol))

            diff_vals = params.d[i] * w_i.values.copy()
            react_diff = react_i.copy()
            for j in range(params.N):
                if j != i:
                    diff_vals = diff_vals - params.d[j] * state.w[j].values
                    react_diff = react_diff - (
                        (-params.omega[j] + params.k[j] * u) * state.w[j].values)
            lhs2 = grad_inner(ScalarField(grid, diff_vals), eta)
            rhs2 = integrate(ScalarField(grid, react_diff * eta.values))
            margin2 = lhs2 - rhs2
            records.append(ComplementarityRecord(i, t_idx, "difference",
                                                 lhs2, rhs2, margin2, tol,
                                                 margin2 >= -tol))
    worst = min((r.margin for r in records), default=0.0)
    return ComplementarityReport(records, worst)


# ---------------------------------------------------------------------------
# survivor counting and the zero-isolation probe

@dataclass
class SurvivorReport:
    threshold: float
    count: int
    survivors: list[int]
    weyl_bound: float
    within_soft_bound: bool
    u_distance_from_cap: float | None  # reported when no component survives


def survivor_count(state: FieldSet, params: ModelParams,
                   threshold: float) -> SurvivorReport:
    """Count components above threshold and compare to the Weyl-law bound."""
    survivors = [i for i, wi in enumerate(state.w) if wi.sup() > threshold]
    grid = state.grid
    measure = float(np.prod(grid.extents))
    bound = nhat_bound(params, measure, grid.dim, mode="weyl")
    count = len(survivors)
    u_dist = None
    if count == 0:
        u_dist = float(np.max(np.abs(state.u.values - params.lam / params.mu)))
    return SurvivorReport(threshold, count, survivors, bound,
                          count <= math.ceil(2.0 * bound), u_dist)


@dataclass
class IsolationReport:
    eta: float
    classifications: list[str]   # "zero", "escaped", "undecided" per trial
    violations: int


def zero_isolation_probe(params: ModelParams, grid: Grid, trials: int,
                         seed: int, settings: SolveSettings | None = None) -> IsolationReport:
    """March random sub-threshold states; none may settle nonzero below eta.

    Initial data is drawn with sup u and sup w_i below eta = delta^2.  A trial
    either collapses to zero, or escapes (u crosses eta at some step, which
    the isolation result does not forbid for the dynamics).  A trial that
    converges to a nonzero state whose u stays below eta falsifies the
    isolation property and raises :class:`IsolationViolation`.
    """
    eta = params.delta ** 2
    settings = settings or SolveSettings(tau=0.5, tol_residual=1e-8,
                                         max_steps=20_000)
    outcomes = []
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        u0 = rng.uniform(0.0, 0.9 * eta, grid.node_count)
        w0 = [rng.uniform(0.0, 0.9 * eta, grid.node_count) for _ in range(params.N)]
        initial = FieldSet.from_arrays(grid, u0, w0)
        escaped = False

        def watch(step, st):
            nonlocal escaped
            if float(np.max(st.u.values)) >= eta:
                escaped = True
                raise StopIteration

        report = march_to_steady(initial, params, settings, observer=watch)
        if escaped:
            outcomes.append("escaped")
        elif report.converged:
            if report.state.sup() < 1e-6:
                outcomes.append("zero")
            elif float(np.max(report.state.u.values)) < eta:
                raise IsolationViolation(
                    f"zero-state isolation violated in trial {trial}: converged nonzero "
                    f"state with sup u = {float(np.max(report.state.u.values)):g} < {eta:g}")
            else:
                outcomes.append("escaped")
        else:
            outcomes.append("undecided")
    return IsolationReport(eta, outcomes, violations=0)
