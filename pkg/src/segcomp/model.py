"""Model coefficients, admissibility verdicts, reaction terms and closed-form bounds.

The system couples ``N`` competing densities ``w_1..w_N`` with a single
resource ``u``:

    -d_i Lap(w_i) = (-omega_i + k_i u - beta * sum_{j != i} a_ij w_j) w_i
    -D   Lap(u)   = (lambda - mu u - sum_i k_i w_i) u

with no-flux boundary conditions.  All coefficients are spatial constants.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import StructuralError


@dataclass
class ModelParams:
    """All coefficients of the competition system plus the admissibility constant.

    ``a`` is the symmetric interaction matrix; its diagonal is never used.
    ``delta`` fixes the admissible coefficient box ``[delta, 1/delta]``.
    """

    N: int
    D: float
    lam: float
    mu: float
    d: np.ndarray
    omega: np.ndarray
    k: np.ndarray
    a: np.ndarray
    beta: float = 0.0
    delta: float = 0.2

    def __post_init__(self):
        self.N = int(self.N)
        if self.N < 1:
            raise StructuralError(f"N must be >= 1, got {self.N}")
        self.d = np.atleast_1d(np.asarray(self.d, dtype=float))
        self.omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        self.k = np.atleast_1d(np.asarray(self.k, dtype=float))
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float)) if np.size(self.a) else np.zeros((self.N, self.N))
        for name in ("d", "omega", "k"):
            if getattr(self, name).shape != (self.N,):
                raise StructuralError(f"{name} must have length N={self.N}")

    def with_beta(self, beta: float) -> "ModelParams":
        return replace(self, beta=float(beta))


def params_hash(params: ModelParams) -> str:
    """Short stable identifier of a parameter set (used to tag states)."""
    doc = {
        "N": params.N,
        "D": params.D,
        "lam": params.lam,
        "mu": params.mu,
        "d": params.d.tolist(),
        "omega": params.omega.tolist(),
        "k": params.k.tolist(),
        "a": params.a.tolist(),
        "beta": params.beta,
        "delta": params.delta,
    }
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form caps implied by an admissible parameter set."""

    u_cap: float        # lambda / mu
    s_cap: float        # delta^-5, sup bound on D*u + sum d_i w_i
    wsum_cap: float     # delta^-6
    eta: float          # delta^2, isolation threshold around the zero state
    ratio_max: float    # max_i (lambda k_i - mu omega_i) / (d_i mu)


def derived_constants(params: ModelParams) -> DerivedConstants:
    delta = params.delta
    ratio = (params.lam * params.k - params.mu * params.omega) / (params.d * params.mu)
    return DerivedConstants(
        u_cap=params.lam / params.mu,
        s_cap=delta ** -5,
        wsum_cap=delta ** -6,
        eta=delta ** 2,
        ratio_max=float(np.max(ratio)),
    )


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    violations: tuple[str, ...]

    def __bool__(self):
        return self.ok


def validate_uniform(params: ModelParams) -> Admissibility:
    """Check the uniform coefficient box and the growth-margin inequalities.

    Structural defects of the interaction matrix (non-square, asymmetric)
    raise :class:`StructuralError`; coefficient-range failures are reported
    in the verdict, one message per violated constraint.
    """
    if params.a.ndim != 2 or params.a.shape != (params.N, params.N):
        raise StructuralError(
            f"interaction matrix must be {params.N}x{params.N}, got shape {params.a.shape}"
        )
    off = ~np.eye(params.N, dtype=bool)
    if params.N > 1 and not np.array_equal(params.a[off], params.a.T[off]):
        raise StructuralError("asymmetric interaction matrix: a_ij != a_ji")

    delta = params.delta
    if not 0.0 < delta < 1.0:
        raise StructuralError(f"delta must lie in (0,1), got {delta}")
    lo, hi = delta, 1.0 / delta
    violations: list[str] = []

    def box(name, value):
        if value < lo:
            violations.append(f"{name} = {value:g} < delta = {lo:g}")
        elif value > hi:
            violations.append(f"{name} = {value:g} > 1/delta = {hi:g}")

    box("lambda", params.lam)
    box("mu", params.mu)
    for i in range(params.N):
        box(f"d[{i}]", params.d[i])
        box(f"omega[{i}]", params.omega[i])
        box(f"k[{i}]", params.k[i])
        for j in range(i + 1, params.N):
            box(f"a[{i},{j}]", params.a[i, j])
    for i in range(params.N):
        margin = params.lam * params.k[i] - params.mu * params.omega[i]
        if margin <= delta:
            violations.append(
                f"lambda*k[{i}] - mu*omega[{i}] = {margin:g} <= delta = {delta:g}"
            )
    return Admissibility(ok=not violations, violations=tuple(violations))


def reaction_w(i: int, u_val, w_vals, params: ModelParams):
    """Pointwise reaction rate of component ``i``; accepts scalars or node arrays."""
    if not 0 <= i < params.N:
        raise IndexError(f"component index {i} out of range for N={params.N}")
    comp = 0.0
    for j in range(params.N):
        if j != i:
            comp = comp + params.a[i, j] * w_vals[j]
    return (-params.omega[i] + params.k[i] * u_val - params.beta * comp) * w_vals[i]


def reaction_u(u_val, w_vals, params: ModelParams):
    """Pointwise reaction rate of the resource; accepts scalars or node arrays."""
    graze = 0.0
    for i in range(params.N):
        graze = graze + params.k[i] * w_vals[i]
    return (params.lam - params.mu * u_val - graze) * u_val


def constant_single_species_state(params: ModelParams, i: int):
    """Positive constant equilibrium with only component ``i`` active.

    Returns ``(u*, w_i*)`` with ``u* = omega_i/k_i`` and
    ``w_i* = (lambda k_i - mu omega_i)/k_i^2``, or ``None`` when the growth
    margin is nonpositive (the component cannot persist).
    """
    if not 0 <= i < params.N:
        raise IndexError(f"component index {i} out of range for N={params.N}")
    margin = params.lam * params.k[i] - params.mu * params.omega[i]
    if margin <= 0.0:
        return None
    return params.omega[i] / params.k[i], margin / params.k[i] ** 2


def nhat_bound(params: ModelParams, domain_measure: float, dim: int,
               c_omega: float | None = None, mode: str = "weyl") -> float:
    """Upper bound on the number of components that can survive segregation.

    ``weyl`` evaluates the explicit asymptotic bound
    ``|Omega| * ratio_max^(dim/2) / ((pi/4)^(dim/2) * Gamma(dim/2 + 1))``;
    ``faber_krahn`` returns ``c_omega * ratio_max^(dim/2)`` with the
    domain constant supplied by the caller.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    ratio = derived_constants(params).ratio_max
    ratio = max(ratio, 0.0)
    if mode == "faber_krahn":
        if c_omega is None:
            raise ValueError("faber_krahn mode requires c_omega")
        return c_omega * ratio ** (dim / 2)
    if mode == "weyl":
        denom = (math.pi / 4.0) ** (dim / 2) * math.gamma(dim / 2 + 1)
        return domain_measure * ratio ** (dim / 2) / denom
    raise ValueError(f"unknown mode {mode!r}")
