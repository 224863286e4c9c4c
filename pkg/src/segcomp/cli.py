"""Command-line entry point: solve | sweep | analyze | verify | eig."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import analysis as an
from . import verify as verification
from .errors import ConfigError, SegcompError
from .io import (ConfigDocument, apply_overrides, build_config, read_snapshot,
                 write_report, write_snapshot, write_table)
from .model import params_hash
from .solver import (FieldSet, continue_in_beta, march_to_steady,
                     newton_refine)


def build_initial(config: ConfigDocument) -> FieldSet:
    """Construct the starting state described by the config's initial section."""
    spec = config.initial
    grid = config.grid
    params = config.model
    n = params.N
    if spec.kind == "snapshot":
        if not spec.path:
            raise ConfigError("initial.kind=snapshot requires initial.path")
        state, _ = read_snapshot(spec.path)
        return state
    if spec.kind == "constant":
        return FieldSet.constant(grid, spec.u_value, [spec.w_value] * n,
                                 params_hash(params))
    if spec.kind == "bumps":
        centers = spec.centers or list(np.linspace(
            0.15 * grid.extents[0], 0.85 * grid.extents[0], n))
        amps = spec.amplitudes or [0.5] * n
        if len(centers) != n or len(amps) != n:
            raise ConfigError("initial.centers/amplitudes must have one entry per component")
        xy = grid.coords()
        w = []
        for c, amp in zip(centers, amps):
            c = np.atleast_1d(np.asarray(c, dtype=float))
            if c.size < grid.dim:
                c = np.repeat(c, grid.dim)
            dist2 = np.sum((xy - c[None, :grid.dim]) ** 2, axis=1)
            w.append(amp * np.exp(-dist2 / spec.width ** 2))
        return FieldSet.from_arrays(grid, np.full(grid.node_count, spec.u_value),
                                    w, params_hash(params))
    if spec.kind == "random":
        rng = np.random.default_rng(spec.seed)
        u0 = rng.uniform(0.0, spec.u_value, grid.node_count)
        w0 = [rng.uniform(0.0, spec.w_value, grid.node_count) for _ in range(n)]
        return FieldSet.from_arrays(grid, u0, w0, params_hash(params))
    raise ConfigError(f"unknown initial kind {spec.kind!r}")


def _load_config(path: str, overrides) -> ConfigDocument:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error in config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    raw = apply_overrides(raw, overrides or [])
    return build_config(raw)


def _cmd_solve(config: ConfigDocument, out: Path) -> int:
    for warning in config.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    initial = build_initial(config)
    report = march_to_steady(initial, config.model, config.solve)
    if config.solve.newton and report.converged:
        report = newton_refine(report.state, config.model, config.solve)
    write_snapshot(report.state,
                   {"params": config.model, "residual": report.residual_sup},
                   out / "state.txt")
    write_report(report, out / "solve_report.json", "structured")
    print(f"solve: converged={report.converged} residual={report.residual_sup:.3e} "
          f"steps={report.steps_taken}")
    return 0 if report.converged else 1


def _cmd_sweep(config: ConfigDocument, out: Path) -> int:
    for warning in config.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    initial = build_initial(config)
    trace = continue_in_beta(initial, config.model, config.betas, config.solve)
    overlap_rows = []
    holder_rows = []
    for idx, (beta, rep) in enumerate(zip(trace.betas, trace.reports)):
        write_snapshot(rep.state,
                       {"params": config.model.with_beta(beta),
                        "residual": rep.residual_sup},
                       out / f"snapshot_{idx:03d}.txt")
        p = config.model.with_beta(beta)
        seg = an.segregation_report(rep.state, p)
        for i in range(p.N):
            for j in range(i + 1, p.N):
                overlap_rows.append((beta, i + 1, j + 1,
                                     float(seg.overlap[i, j]),
                                     float(seg.scaled_overlap[i, j])))
        seminorms = [an.holder_seminorm(wi, config.analysis.alpha)
                     for wi in rep.state.w]
        holder_rows.append((beta, *seminorms))
    write_report(trace, out / "trace.txt", "table")
    write_report(trace, out / "trace.json", "structured")
    write_table(out / "overlaps.txt",
                ("beta", "i", "j", "overlap", "scaled_overlap"), overlap_rows)
    write_table(out / "holder.txt",
                ("beta", *[f"w_{i+1}" for i in range(config.model.N)]), holder_rows)
    if config.analysis.decay_center is not None and len(trace.betas) >= 3:
        fit = an.decay_fit(trace, 0, config.analysis.decay_center,
                           config.analysis.decay_rho,
                           diffusivities=config.model.d)
        write_report(fit, out / "decay.json", "structured")
        write_report(fit, out / "decay.txt", "table")
    bad = sum(1 for r in trace.reports if not r.converged)
    print(f"sweep: {len(trace.betas)} beta values, {bad} unconverged")
    return 0 if bad == 0 else 1


def _cmd_analyze(config: ConfigDocument, out: Path) -> int:
    if not config.analysis.snapshot:
        raise ConfigError("analyze requires analysis.snapshot in the config")
    state, meta = read_snapshot(config.analysis.snapshot)
    params = meta.get("params", config.model)
    threshold = config.analysis.threshold

    bounds = an.check_linf_bounds(state, params)
    write_report(bounds, out / "bounds.txt", "table")
    write_report(bounds, out / "bounds.json", "structured")
    seg = an.segregation_report(state, params)
    write_report(seg, out / "segregation.json", "structured")
    if params.N > 1:
        write_report(seg, out / "segregation.txt", "table")
    surv = an.survivor_count(state, params, threshold)
    write_report(surv, out / "survivors.json", "structured")
    eig = an.faber_krahn_check(state, params, threshold)
    write_table(out / "faber_krahn.txt",
                ("component", "lambda1", "cap", "verdict"),
                [(r.component + 1, r.lambda1, r.cap,
                  "pass" if r.passed else "FAIL") for r in eig])
    etas = an.cosine_test_functions(state.grid, config.analysis.test_functions)
    comp = an.complementarity_check(state, params, etas)
    write_report(comp, out / "complementarity.txt", "table")
    write_report(comp, out / "complementarity.json", "structured")

    checks_ok = (bounds.all_pass and all(r.passed for r in eig) and comp.all_pass)
    print(f"analyze: bounds={'pass' if bounds.all_pass else 'FAIL'} "
          f"eigenvalue={'pass' if all(r.passed for r in eig) else 'FAIL'} "
          f"complementarity={'pass' if comp.all_pass else 'FAIL'} "
          f"survivors={surv.count}")
    return 0 if checks_ok else 1


def _cmd_eig(config: ConfigDocument, out: Path) -> int:
    if not config.analysis.snapshot:
        raise ConfigError("eig requires analysis.snapshot in the config")
    state, meta = read_snapshot(config.analysis.snapshot)
    params = meta.get("params", config.model)
    records = an.faber_krahn_check(state, params, config.analysis.threshold)
    write_table(out / "eig.txt", ("component", "lambda1", "cap", "verdict"),
                [(r.component + 1, r.lambda1, r.cap,
                  "pass" if r.passed else "FAIL") for r in records])
    for r in records:
        print(f"component {r.component + 1}: lambda1={r.lambda1:.6g} "
              f"cap={r.cap:.6g} {'pass' if r.passed else 'FAIL'}")
    return 0 if all(r.passed for r in records) else 1


def _cmd_verify(out: Path) -> int:
    results = verification.run_all()
    write_table(out / "verify.txt", ("criterion", "passed", "detail"),
                [(r.name, str(r.passed), r.detail) for r in results])
    return 0 if all(r.passed for r in results) else 1


def dispatch(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="segcomp",
        description="Steady states and segregation diagnostics for "
                    "strong-competition reaction-diffusion systems.")
    sub = parser.add_subparsers(dest="command")
    for name in ("solve", "sweep", "analyze", "verify", "eig"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "verify"))
        p.add_argument("--out", default=".")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage()
        return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify":
            return _cmd_verify(out)
        config = _load_config(args.config, args.overrides)
        if args.command == "solve":
            return _cmd_solve(config, out)
        if args.command == "sweep":
            return _cmd_sweep(config, out)
        if args.command == "analyze":
            return _cmd_analyze(config, out)
        if args.command == "eig":
            return _cmd_eig(config, out)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SegcompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
