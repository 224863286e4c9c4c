"""Configuration parsing, snapshot persistence and report emission.

Snapshots are versioned plain-text tables (one node per row, 17 significant
digits, round-trip exact for doubles).  Reports come in two flavors: a flat
tab-delimited table for plotting and a structured JSON document.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, SnapshotError, StructuralError
from .grid import Grid, ScalarField
from .model import ModelParams, validate_uniform
from .solver import (ContinuationTrace, FieldSet, SolveReport, SolveSettings)

SNAPSHOT_VERSION = 1
_FMT = "%.17g"


# ---------------------------------------------------------------------------
# configuration

@dataclass
class AnalysisSettings:
    alpha: float = 0.5
    threshold: float = 0.01
    decay_center: tuple | None = None
    decay_rho: float = 0.5
    test_functions: int = 20
    seed: int = 0
    snapshot: str | None = None   # input snapshot for the analyze/eig commands


@dataclass
class InitialSpec:
    """How a run builds its starting state.

    kind: "constant" (u_value, w_value), "bumps" (per-component Gaussian
    bumps with given centers/amplitudes/width), "random" (seeded uniform),
    or "snapshot" (path).
    """
    kind: str = "constant"
    u_value: float = 1.0
    w_value: float = 0.1
    centers: list | None = None
    amplitudes: list | None = None
    width: float = 0.1
    seed: int = 0
    path: str | None = None


@dataclass
class ConfigDocument:
    model: ModelParams
    grid: Grid
    solve: SolveSettings
    betas: list[float]
    analysis: AnalysisSettings
    initial: InitialSpec
    warnings: list[str]


_MODEL_KEYS = {"N", "D", "lambda", "mu", "d", "omega", "k", "a", "beta", "delta"}
_GRID_KEYS = {"dim", "extents", "counts"}
_SOLVE_KEYS = {"tau", "tol_residual", "tol_update", "max_steps", "newton", "linear_tol"}
_CONT_KEYS = {"betas", "start", "factor", "count"}
_ANALYSIS_KEYS = {"alpha", "threshold", "decay_center", "decay_rho",
                  "test_functions", "seed", "snapshot"}
_INITIAL_KEYS = {"kind", "u_value", "w_value", "centers", "amplitudes",
                 "width", "seed", "path"}
_SECTIONS = {"model", "grid", "solve", "continuation", "analysis", "initial"}


def _check_keys(section: str, doc: dict, allowed: set):
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in section '{section}': {sorted(unknown)}")


def _expand(value, n, name):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.full(n, arr[0])
    if arr.size != n:
        raise ConfigError(f"'{name}' must be a scalar or a length-{n} list")
    return arr


def parse_config(text: str) -> ConfigDocument:
    """Parse a YAML run configuration, applying defaults and admissibility checks."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error in config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    return build_config(raw)


def build_config(raw: dict) -> ConfigDocument:
    """Construct a ConfigDocument from a parsed (and possibly overridden) mapping."""
    _check_keys("<root>", raw, _SECTIONS)
    for section in ("model", "grid"):
        if section not in raw:
            raise ConfigError(f"missing required section '{section}'")

    mdoc = dict(raw["model"])
    _check_keys("model", mdoc, _MODEL_KEYS)
    try:
        n = int(mdoc["N"])
    except KeyError:
        raise ConfigError("model section requires 'N'")
    a_raw = mdoc.get("a", 1.0)
    a = np.asarray(a_raw, dtype=float)
    if a.ndim == 0:
        a = np.full((n, n), float(a))
    if a.shape != (n, n):
        raise ConfigError(f"'a' must be an {n}x{n} matrix or a scalar")
    off = ~np.eye(n, dtype=bool)
    if n > 1 and not np.array_equal(a[off], a.T[off]):
        raise StructuralError("asymmetric interaction: a_ij != a_ji")
    try:
        params = ModelParams(
            N=n,
            D=float(mdoc.get("D", 1.0)),
            lam=float(mdoc.get("lambda", 1.0)),
            mu=float(mdoc.get("mu", 1.0)),
            d=_expand(mdoc.get("d", 1.0), n, "d"),
            omega=_expand(mdoc.get("omega", 0.2), n, "omega"),
            k=_expand(mdoc.get("k", 1.0), n, "k"),
            a=a,
            beta=float(mdoc.get("beta", 0.0)),
            delta=float(mdoc.get("delta", 0.2)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"type mismatch in model section: {exc}") from exc

    gdoc = dict(raw["grid"])
    _check_keys("grid", gdoc, _GRID_KEYS)
    extents = np.atleast_1d(np.asarray(gdoc.get("extents", 1.0), dtype=float))
    counts = np.atleast_1d(np.asarray(gdoc.get("counts", 201), dtype=int))
    dim = int(gdoc.get("dim", len(extents)))
    if len(extents) == 1 and dim == 2:
        extents = np.repeat(extents, 2)
    if len(counts) == 1 and dim == 2:
        counts = np.repeat(counts, 2)
    if dim != len(extents):
        raise ConfigError("grid 'dim' inconsistent with 'extents'")
    try:
        grid = Grid(tuple(extents), tuple(counts))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sdoc = dict(raw.get("solve", {}))
    _check_keys("solve", sdoc, _SOLVE_KEYS)
    try:
        solve = SolveSettings(**{k: sdoc[k] for k in sdoc})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solve section: {exc}") from exc

    cdoc = dict(raw.get("continuation", {}))
    _check_keys("continuation", cdoc, _CONT_KEYS)
    if "betas" in cdoc:
        betas = [float(b) for b in cdoc["betas"]]
    elif cdoc:
        start = float(cdoc.get("start", 10.0))
        factor = float(cdoc.get("factor", 10.0))
        count = int(cdoc.get("count", 4))
        if factor <= 1.0 or count < 1:
            raise ConfigError("geometric schedule needs factor > 1 and count >= 1")
        betas = [start * factor ** i for i in range(count)]
    else:
        betas = [params.beta]

    adoc = dict(raw.get("analysis", {}))
    _check_keys("analysis", adoc, _ANALYSIS_KEYS)
    analysis = AnalysisSettings(**{k: adoc[k] for k in adoc})
    if analysis.decay_center is not None:
        analysis.decay_center = tuple(np.atleast_1d(analysis.decay_center).astype(float))

    idoc = dict(raw.get("initial", {}))
    _check_keys("initial", idoc, _INITIAL_KEYS)
    initial = InitialSpec(**{k: idoc[k] for k in idoc})

    warnings = []
    verdict = validate_uniform(params)
    if not verdict.ok:
        warnings.append("parameters are not admissible: " + "; ".join(verdict.violations))
    return ConfigDocument(params, grid, solve, betas, analysis, initial, warnings)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``section.key=value`` overrides onto a parsed config mapping."""
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, _, value = item.partition("=")
        parts = key.split(".")
        if len(parts) != 2:
            raise ConfigError(f"override key '{key}' must be 'section.key'")
        section, name = parts
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section '{section}'")
        allowed = {"model": _MODEL_KEYS, "grid": _GRID_KEYS, "solve": _SOLVE_KEYS,
                   "continuation": _CONT_KEYS, "analysis": _ANALYSIS_KEYS,
                   "initial": _INITIAL_KEYS}[section]
        if name not in allowed:
            raise ConfigError(f"unknown config key '{key}'")
        out.setdefault(section, {})
        out[section][name] = yaml.safe_load(value)
    return out


# ---------------------------------------------------------------------------
# snapshots

def _fmt(x: float) -> str:
    return _FMT % x


def write_snapshot(state: FieldSet, meta: dict, path) -> None:
    """Write the state as a versioned text table; see ``read_snapshot``.

    ``meta`` may carry 'params' (ModelParams), 'residual' and 'timestamp'.
    """
    grid = state.grid
    n_comp = len(state.w)
    lines = [f"# segcomp snapshot v{SNAPSHOT_VERSION}"]
    params = meta.get("params")
    if params is not None:
        pdoc = {"N": params.N, "D": params.D, "lambda": params.lam,
                "mu": params.mu, "d": params.d.tolist(),
                "omega": params.omega.tolist(), "k": params.k.tolist(),
                "a": params.a.tolist(), "beta": params.beta,
                "delta": params.delta}
        lines.append("# model = " + json.dumps(pdoc, sort_keys=True))
        lines.append("# beta = " + _fmt(params.beta))
    lines.append("# grid = " + json.dumps(
        {"extents": list(grid.extents), "counts": list(grid.counts)}))
    lines.append("# residual = " + _fmt(float(meta.get("residual", float("nan")))))
    lines.append("# timestamp = " + str(meta.get("timestamp", "-")))
    cols = [f"x{k}" for k in range(grid.dim)] + ["u"] + [f"w_{i+1}" for i in range(n_comp)]
    lines.append("# columns = " + " ".join(cols))
    xy = grid.coords()
    data = np.column_stack([xy, state.u.values] + [wi.values for wi in state.w])
    for row in data:
        lines.append("\t".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path):
    """Read a snapshot; the grid is reconstructed from the header (header wins).

    Returns ``(FieldSet, meta)`` with meta keys 'params' (when present),
    'residual' and 'timestamp'.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# segcomp snapshot v"):
        raise SnapshotError("not a segcomp snapshot")
    version = int(lines[0].rsplit("v", 1)[1])
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"version mismatch: file v{version}, reader v{SNAPSHOT_VERSION}")
    header = {}
    body_start = 0
    for idx, line in enumerate(lines):
        if line.startswith("#"):
            if "=" in line:
                key, _, value = line[1:].partition("=")
                header[key.strip()] = value.strip()
            body_start = idx + 1
        else:
            break
    if "grid" not in header or "columns" not in header:
        raise SnapshotError("truncated header")
    gdoc = json.loads(header["grid"])
    grid = Grid(tuple(gdoc["extents"]), tuple(gdoc["counts"]))
    columns = header["columns"].split()
    n_comp = sum(1 for c in columns if c.startswith("w_"))
    rows = [line for line in lines[body_start:] if line.strip()]
    if len(rows) != grid.node_count:
        raise SnapshotError(
            f"row count mismatch: {len(rows)} rows for {grid.node_count} nodes")
    try:
        data = np.array([[float(v) for v in row.split("\t")] for row in rows])
    except ValueError as exc:
        raise SnapshotError(f"bad data row: {exc}") from exc
    if data.shape[1] != len(columns):
        raise SnapshotError(
            f"column count mismatch: {data.shape[1]} columns, header lists {len(columns)}")
    u = data[:, grid.dim]
    w = [data[:, grid.dim + 1 + i] for i in range(n_comp)]
    meta = {"residual": float(header.get("residual", "nan")),
            "timestamp": header.get("timestamp", "-")}
    if "model" in header:
        pdoc = json.loads(header["model"])
        meta["params"] = ModelParams(
            N=pdoc["N"], D=pdoc["D"], lam=pdoc["lambda"], mu=pdoc["mu"],
            d=np.asarray(pdoc["d"]), omega=np.asarray(pdoc["omega"]),
            k=np.asarray(pdoc["k"]), a=np.asarray(pdoc["a"]),
            beta=pdoc["beta"], delta=pdoc["delta"])
    return FieldSet.from_arrays(grid, u, w), meta


# ---------------------------------------------------------------------------
# reports

def write_table(path, columns, rows) -> None:
    """Tab-delimited table with a single comment-prefixed header line."""
    lines = ["# " + "\t".join(columns)]
    for row in rows:
        lines.append("\t".join(_fmt(v) if isinstance(v, float) else str(v)
                               for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _to_plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, float) and obj in (float("inf"), float("-inf")):
        return str(obj)
    return obj


def _table_rows(report):
    """Flatten known report types into (columns, rows)."""
    from . import analysis as an

    if isinstance(report, an.BoundReport):
        rows = [("u_max", report.u_max, "pass" if report.u_pass else "FAIL"),
                ("u_cap", report.u_cap, ""),
                ("s_max", report.s_max, "pass" if report.s_pass else "FAIL"),
                ("s_cap", report.s_cap, ""),
                ("wsum_max", report.wsum_max, "pass" if report.wsum_pass else "FAIL"),
                ("wsum_cap", report.wsum_cap, "")]
        return ("quantity", "value", "verdict"), rows
    if isinstance(report, an.SegregationReport):
        n = report.overlap.shape[0]
        rows = [(i + 1, j + 1, float(report.overlap[i, j]),
                 float(report.scaled_overlap[i, j]))
                for i in range(n) for j in range(i + 1, n)]
        return ("i", "j", "overlap", "scaled_overlap"), rows
    if isinstance(report, an.ComplementarityReport):
        rows = [(r.component + 1, r.test_index, r.kind, r.lhs, r.rhs, r.margin,
                 "pass" if r.passed else "FAIL") for r in report.records]
        return ("component", "test", "kind", "lhs", "rhs", "margin", "verdict"), rows
    if isinstance(report, an.DecayFit):
        rows = [(float(b), float(s)) for b, s in zip(report.betas, report.sup_h)]
        return ("beta", "sup_h"), rows
    if isinstance(report, SolveReport):
        rows = [(report.residual_sup, report.steps_taken,
                 str(report.converged), report.wall_time)]
        return ("residual_sup", "steps", "converged", "wall_time"), rows
    if isinstance(report, ContinuationTrace):
        rows = [(float(b), r.residual_sup, r.steps_taken, str(r.converged))
                for b, r in zip(report.betas, report.reports)]
        return ("beta", "residual_sup", "steps", "converged"), rows
    raise TypeError(f"no table layout for {type(report).__name__}")


def write_report(report, path, fmt: str = "structured") -> None:
    """Emit a report deterministically, as a table or a structured document."""
    if fmt == "table":
        columns, rows = _table_rows(report)
        write_table(path, columns, rows)
    elif fmt == "structured":
        doc = _to_plain(_strip_state(report))
        Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def _strip_state(report):
    # field data does not belong in reports; snapshots carry it
    if isinstance(report, SolveReport):
        return {"residual_sup": report.residual_sup,
                "steps_taken": report.steps_taken,
                "converged": report.converged,
                "wall_time": report.wall_time}
    if isinstance(report, ContinuationTrace):
        return {"betas": report.betas,
                "provenance": report.provenance,
                "reports": [_strip_state(r) for r in report.reports]}
    return report
