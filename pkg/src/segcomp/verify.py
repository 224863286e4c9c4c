"""Desk-scale verification suite.

Each criterion is a standalone callable returning a :class:`CriterionResult`;
the CLI ``verify`` command and the acceptance test module both run them.
Scenario A is the single-species constant-equilibrium setup on [0,1];
Scenario B is a two-species segregation run on [0,12] (deep enough that each
territory spans several healing lengths and the segregated state is stable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import analysis as an
from .grid import Grid, ScalarField, SupportMask, integrate, lambda1_restricted, laplacian_neumann
from .io import read_snapshot, write_snapshot
from .model import ModelParams, constant_single_species_state, validate_uniform
from .errors import SegcompError
from .solver import (ContinuationTrace, FieldSet, SolveSettings, continue_in_beta,
                     march_to_steady, newton_refine)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str


def scenario_a_params(beta: float = 0.0) -> ModelParams:
    return ModelParams(N=1, D=1.0, lam=1.0, mu=1.0, d=[1.0], omega=[0.2],
                       k=[1.0], a=[[0.0]], beta=beta, delta=0.2)


def scenario_a_grid(nodes: int = 201) -> Grid:
    return Grid((1.0,), (nodes,))


def scenario_b_params() -> ModelParams:
    return ModelParams(N=2, D=1.0, lam=1.0, mu=1.0, d=[1.0, 1.0],
                       omega=[0.2, 0.2], k=[1.0, 1.0],
                       a=[[0.0, 1.0], [1.0, 0.0]], beta=10.0, delta=0.2)


def scenario_b_grid() -> Grid:
    # The domain must fit two territories that are several healing lengths
    # sqrt(d/(lam k - mu omega)) deep; on short boxes the segregated state
    # never develops its bulk plateau and one component excludes the other.
    return Grid((12.0,), (401,))


def _bump(x, center, amp, width):
    return amp * np.exp(-((x - center) / width) ** 2)


def scenario_b_initial(grid: Grid) -> FieldSet:
    x = grid.axis_coords(0)
    # Two asymmetric plateau bumps near the single-species equilibrium
    # (u = omega/k, w = (lam k - mu omega)/k^2), separated by a transition
    # whose width differs on the two sides.  Seeding close to the segregated
    # configuration keeps the transient away from the well-mixed state whose
    # exclusion mode would hand the whole domain to one component.
    mid = grid.extents[0] / 2.0
    w1 = 0.8 * 0.5 * (1.0 - np.tanh((x - mid) / 0.3))
    w2 = 0.8 * 0.5 * (1.0 + np.tanh((x - mid) / 0.45))
    return FieldSet.from_arrays(grid, np.full_like(x, 0.2), [w1, w2])


SCENARIO_B_BETAS = (10.0, 1e2, 1e3, 1e4, 1e5)


@lru_cache(maxsize=1)
def scenario_b_trace():
    """Continuation trace for Scenario B, shared across criteria 3-7."""
    params = scenario_b_params()
    grid = scenario_b_grid()
    settings = SolveSettings(tau=1.0, tol_residual=1e-8, tol_update=1e-8)
    trace = continue_in_beta(scenario_b_initial(grid), params,
                             SCENARIO_B_BETAS, settings)
    return params, grid, trace


# ---------------------------------------------------------------------------

def criterion_1() -> CriterionResult:
    """Constant-equilibrium recovery for the single-species setup."""
    params = scenario_a_params()
    grid = scenario_a_grid()
    initial = FieldSet.constant(grid, 1.0, [0.1])
    report = march_to_steady(initial, params, SolveSettings(tau=0.5))
    u_star, w_star = constant_single_species_state(params, 0)
    target = FieldSet.constant(grid, u_star, [w_star])
    err = report.state.sup_diff(target)
    ok = (report.converged and report.residual_sup <= 1e-8
          and err <= 1e-6 and report.wall_time < 5.0)
    return CriterionResult(
        "constant_equilibrium_recovery", ok,
        f"residual={report.residual_sup:.2e} err={err:.2e} "
        f"steps={report.steps_taken} time={report.wall_time:.2f}s")


def _random_admissible(rng) -> ModelParams:
    delta = 0.2
    lo, hi = delta, 1.0 / delta
    n = int(rng.integers(1, 9))
    while True:
        lam = rng.uniform(lo, hi)
        mu = rng.uniform(lo, hi)
        d = rng.uniform(lo, hi, n)
        omega = rng.uniform(lo, hi, n)
        k = rng.uniform(lo, hi, n)
        if np.all(lam * k - mu * omega > delta):
            break
    a = rng.uniform(lo, hi, (n, n))
    a = (a + a.T) / 2.0
    beta = float(rng.choice([1.0, 10.0, 100.0, 1000.0]))
    return ModelParams(N=n, D=rng.uniform(lo, hi), lam=lam, mu=mu, d=d,
                       omega=omega, k=k, a=a, beta=beta, delta=delta)


def _steady_hybrid(initial: FieldSet, params: ModelParams):
    """Short IMEX march as a preconditioner, then Newton to a tight residual.

    Many random parameter draws orbit a limit cycle under pure marching, so
    the march is only asked to land somewhere in the Newton basin; damped
    Newton then reaches the equilibrium (stable or not) in a few iterations.
    """
    report = march_to_steady(initial, params,
                             SolveSettings(tau=0.5, tol_residual=1e-4,
                                           tol_update=1e-4, max_steps=300))
    state = report.state
    for _ in range(3):
        try:
            return newton_refine(state, params, SolveSettings(tol_residual=1e-10))
        except SegcompError:
            report = march_to_steady(state, params,
                                     SolveSettings(tau=0.5, tol_residual=1e-6,
                                                   max_steps=2000))
            state = report.state
    return report


def criterion_2(runs: int = 50) -> CriterionResult:
    """Sup-norm bound suite over seeded random admissible parameter sets."""
    grid = scenario_a_grid()
    failures = []
    worst_excess = -math.inf
    for run in range(runs):
        rng = np.random.default_rng([2024, run])
        params = _random_admissible(rng)
        assert validate_uniform(params).ok
        u0 = rng.uniform(0.0, params.lam / params.mu, grid.node_count)
        w0 = [rng.uniform(0.0, 0.5, grid.node_count) for _ in range(params.N)]
        report = _steady_hybrid(FieldSet.from_arrays(grid, u0, w0), params)
        if report.residual_sup > 1e-6:
            failures.append(f"run {run}: residual {report.residual_sup:.2e}")
            continue
        bounds = an.check_linf_bounds(report.state, params)
        worst_excess = max(worst_excess, bounds.u_max - bounds.u_cap)
        if bounds.u_max > bounds.u_cap + 1e-6 or bounds.s_max > bounds.s_cap:
            failures.append(f"run {run}: u_max={bounds.u_max:.8f} cap={bounds.u_cap:.8f} "
                            f"s_max={bounds.s_max:.3f}")
    return CriterionResult(
        "linf_bound_suite", not failures,
        f"{runs - len(failures)}/{runs} runs clean, worst u excess {worst_excess:.2e}"
        + ("; " + "; ".join(failures[:3]) if failures else ""))


def _overlap_sup(state: FieldSet) -> float:
    return float(np.max(state.w[0].values * state.w[1].values))


def criterion_3() -> CriterionResult:
    """Pointwise and integrated overlaps shrink along the continuation."""
    params, _, trace = scenario_b_trace()
    idx_1e2, idx_1e4 = 1, 3
    sups = [_overlap_sup(r.state) for r in trace.reports[:4]]
    decreasing = all(b < a for a, b in zip(sups, sups[1:]))
    ratio = sups[3] / sups[0]
    scaled = []
    for beta, rep in zip(trace.betas, trace.reports):
        seg = an.segregation_report(rep.state, params.with_beta(beta))
        scaled.append(float(seg.scaled_overlap[0, 1]))
    ref = scaled[idx_1e2]
    bounded = all(s <= 3.0 * ref for s in scaled[idx_1e2 + 1:])
    converged = all(r.converged for r in trace.reports)
    ok = decreasing and ratio <= 0.02 and bounded and converged
    return CriterionResult(
        "segregation_along_continuation", ok,
        f"sup overlaps={['%.3e' % s for s in sups]} ratio={ratio:.2e} "
        f"scaled={['%.3f' % s for s in scaled]} converged={converged}")


def criterion_4() -> CriterionResult:
    """Hoelder seminorms stay bounded as beta grows (no-growth proxy)."""
    _, _, trace = scenario_b_trace()
    state_1e2 = trace.reports[1].state
    state_1e4 = trace.reports[3].state
    details = []
    ok = True
    for i in range(2):
        s_low = an.holder_seminorm(state_1e2.w[i], 0.5)
        s_high = an.holder_seminorm(state_1e4.w[i], 0.5)
        details.append(f"w{i+1}: {s_low:.3f}->{s_high:.3f}")
        if s_high > 3.0 * s_low:
            ok = False
    return CriterionResult("holder_boundedness", ok, " ".join(details))


def criterion_5() -> CriterionResult:
    """Restricted first eigenvalue of each surviving support is below its cap."""
    params, _, trace = scenario_b_trace()
    state = trace.reports[3].state
    threshold = an.default_threshold(state)
    records = an.faber_krahn_check(state, params.with_beta(1e4), threshold)
    ok = bool(records) and all(r.passed for r in records)
    detail = " ".join(f"w{r.component+1}: lam1={r.lambda1:.3f} cap={r.cap:.3f}"
                      for r in records)
    return CriterionResult("faber_krahn_inequality", ok, detail)


def criterion_6() -> CriterionResult:
    """Competitor mass inside a territory decays exponentially in sqrt(beta)."""
    params, grid, trace = scenario_b_trace()
    sub = ContinuationTrace(list(trace.betas[1:]), list(trace.reports[1:]),
                            trace.provenance)
    state = sub.reports[-1].state
    x = grid.axis_coords(0)
    peak = float(x[int(np.argmax(state.w[0].values))])
    # interface = innermost crossing of the two components at the largest beta
    cross = np.flatnonzero(np.diff(np.sign(
        state.w[0].values - state.w[1].values)))
    interface = float(x[cross[0]]) if cross.size else grid.extents[0] / 2
    edge = interface - 0.08   # keep the ball clear of the interface layer
    rho = max(0.1, 2.0 * (edge - peak)) if edge > peak else 0.1
    fit = an.decay_fit(sub, 0, (peak,), rho, diffusivities=params.d)
    ratio = fit.sup_h[-1] / fit.sup_h[0] if fit.sup_h[0] > 0 else 0.0
    ok = fit.slope < 0 and fit.r_squared >= 0.9 and ratio <= 0.1
    return CriterionResult(
        "exponential_decay", ok,
        f"slope={fit.slope:.4f} r2={fit.r_squared:.4f} ratio={ratio:.2e} "
        f"center={peak:.3f} rho={rho:.3f} sup_h={['%.2e' % s for s in fit.sup_h]}")


def criterion_7() -> CriterionResult:
    """Weak complementarity inequalities hold against cosine test functions."""
    params, grid, trace = scenario_b_trace()
    state = trace.reports[3].state
    etas = an.cosine_test_functions(grid, 20)
    report = an.complementarity_check(state, params.with_beta(1e4), etas)
    return CriterionResult(
        "complementarity", report.all_pass,
        f"worst_margin={report.worst_margin:.3e} records={len(report.records)}")


def criterion_8() -> CriterionResult:
    """Zero-isolation probe: no sub-threshold trial settles on a nonzero state."""
    params = scenario_a_params()
    grid = scenario_a_grid()
    report = an.zero_isolation_probe(params, grid, trials=20, seed=7)
    counts = {c: report.classifications.count(c)
              for c in ("zero", "escaped", "undecided")}
    ok = report.violations == 0 and counts["undecided"] == 0
    return CriterionResult("zero_isolation", ok, f"classifications={counts}")


def criterion_9() -> CriterionResult:
    """Ten identical components: disjoint survivor territories at large beta."""
    n = 10
    # Cross-competition at the top of the admissible box keeps the interface
    # layer amplitude (~1/sqrt(beta*a)) below the support threshold, so the
    # survivors' thresholded territories end up strictly disjoint.
    params = ModelParams(N=n, D=1.0, lam=1.0, mu=1.0, d=np.ones(n),
                         omega=np.full(n, 0.2), k=np.ones(n),
                         a=np.full((n, n), 5.0), beta=10.0, delta=0.2)
    grid = Grid((12.0,), (401,))
    rng = np.random.default_rng(11)
    x = grid.axis_coords(0)
    w0 = [_bump(x, rng.uniform(0.5, 11.5), rng.uniform(0.4, 0.8), 0.6)
          for _ in range(n)]
    initial = FieldSet.from_arrays(grid, np.full_like(x, 0.2), w0)
    settings = SolveSettings(tau=1.0, tol_residual=1e-8, tol_update=1e-8)
    trace = continue_in_beta(initial, params, [10.0, 1e2, 1e3, 1e4], settings)
    state = trace.reports[-1].state
    surv = an.survivor_count(state, params.with_beta(1e4), threshold=0.01)
    support = an.support_and_nodal(state, threshold=0.01)
    disjoint = True
    for ai in range(len(surv.survivors)):
        for bi in range(ai + 1, len(surv.survivors)):
            fa = support.supports[surv.survivors[ai]].flags
            fb = support.supports[surv.survivors[bi]].flags
            if np.any(fa & fb):
                disjoint = False
    extinct_ok = all(state.w[i].sup() <= 0.01 for i in range(n)
                     if i not in surv.survivors)
    converged = all(r.converged for r in trace.reports)
    ok = disjoint and extinct_ok and converged
    return CriterionResult(
        "survivor_dichotomy", ok,
        f"survivors={surv.count} weyl_bound={surv.weyl_bound:.2f} "
        f"soft_bound_ok={surv.within_soft_bound} disjoint={disjoint} "
        f"converged={converged}")


def criterion_10(tmpdir=None) -> CriterionResult:
    """Numerical kernel validation: stencil order, eigenvalue, quadrature, io."""
    import tempfile
    from pathlib import Path
    details = []
    ok = True

    def lap_error(nodes):
        grid = Grid((1.0,), (nodes,))
        f = ScalarField.from_function(grid, lambda x: np.cos(np.pi * x))
        out = laplacian_neumann(f, 1.0)
        exact = -np.pi ** 2 * f.values
        return float(np.max(np.abs(out.values - exact)))

    ratio = lap_error(101) / lap_error(201)
    details.append(f"stencil ratio={ratio:.3f}")
    ok &= 3.5 <= ratio <= 4.5

    grid = Grid((1.0,), (201,))
    flags = np.ones(grid.node_count, dtype=bool)
    flags[0] = flags[-1] = False
    lam1 = lambda1_restricted(SupportMask(grid, flags), grid)
    details.append(f"dirichlet lam1={lam1:.5f}")
    ok &= abs(lam1 - np.pi ** 2) <= 0.01 * np.pi ** 2

    lin_grid = Grid((1.0,), (87,))
    lin = ScalarField.from_function(lin_grid, lambda x: x)
    err = abs(integrate(lin) - 0.5)
    details.append(f"trapezoid linear err={err:.1e}")
    ok &= err <= 1e-14

    rng = np.random.default_rng(3)
    state = FieldSet.from_arrays(grid, rng.random(grid.node_count),
                                 [rng.random(grid.node_count)])
    with tempfile.TemporaryDirectory(dir=tmpdir) as td:
        path = Path(td) / "snap.txt"
        write_snapshot(state, {"params": scenario_a_params(), "residual": 0.0}, path)
        back, _ = read_snapshot(path)
        rt = state.sup_diff(back)
    details.append(f"roundtrip diff={rt:.1e}")
    ok &= rt == 0.0

    return CriterionResult("kernel_validation", bool(ok), " ".join(details))


ALL_CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
                criterion_5, criterion_6, criterion_7, criterion_8,
                criterion_9, criterion_10]


def run_all(printer=print) -> list[CriterionResult]:
    """Run every acceptance criterion, printing one pass/fail line each."""
    results = []
    for idx, fn in enumerate(ALL_CRITERIA, start=1):
        result = fn()
        results.append(result)
        status = "PASS" if result.passed else "FAIL"
        printer(f"[{status}] criterion {idx} {result.name}: {result.detail}")
    return results
