"""Box discretization with no-flux boundary closure.

Nodes live on a tensor grid over an interval or rectangle, ordered row-major
(x-major in 2D).  The Laplacian uses the second-order central stencil with
mirror (ghost-reflection) closure at the boundary, which keeps constants in
the kernel and makes the trapezoid-weighted operator exactly symmetric with
zero column sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .errors import EmptySupportError


def _lap_1d(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    lap = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    # mirror ghost node: u[-1] = u[1], u[n] = u[n-2]
    lap[0, 1] = 2.0
    lap[n - 1, n - 2] = 2.0
    return (lap * (1.0 / h ** 2)).tocsr()


def _trap_1d(n: int, h: float) -> np.ndarray:
    q = np.full(n, h)
    q[0] = q[-1] = h / 2.0
    return q


@dataclass
class Grid:
    """Uniform tensor grid on ``[0, extent_0] x ... `` with >= 3 nodes per axis."""

    extents: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        self.extents = tuple(float(e) for e in np.atleast_1d(self.extents))
        self.counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if len(self.extents) != len(self.counts):
            raise ValueError("extents and counts must have equal length")
        if len(self.extents) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if any(e <= 0 for e in self.extents):
            raise ValueError("extents must be positive")
        if any(c < 3 for c in self.counts):
            raise ValueError("need at least 3 nodes per axis")
        self._cache: dict = {}

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / (c - 1) for e, c in zip(self.extents, self.counts))

    @property
    def node_count(self) -> int:
        return int(np.prod(self.counts))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.linspace(0.0, self.extents[axis], self.counts[axis])

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (node_count, dim), row-major order."""
        if self.dim == 1:
            return self.axis_coords(0)[:, None]
        x, y = np.meshgrid(self.axis_coords(0), self.axis_coords(1), indexing="ij")
        return np.column_stack([x.ravel(), y.ravel()])

    @property
    def laplacian_matrix(self) -> sp.csr_matrix:
        if "lap" not in self._cache:
            h = self.spacing
            if self.dim == 1:
                lap = _lap_1d(self.counts[0], h[0])
            else:
                lx = _lap_1d(self.counts[0], h[0])
                ly = _lap_1d(self.counts[1], h[1])
                ix = sp.identity(self.counts[0], format="csr")
                iy = sp.identity(self.counts[1], format="csr")
                lap = (sp.kron(lx, iy) + sp.kron(ix, ly)).tocsr()
            self._cache["lap"] = lap
        return self._cache["lap"]

    @property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid quadrature weights per node."""
        if "quad" not in self._cache:
            h = self.spacing
            if self.dim == 1:
                q = _trap_1d(self.counts[0], h[0])
            else:
                q = np.kron(_trap_1d(self.counts[0], h[0]),
                            _trap_1d(self.counts[1], h[1]))
            self._cache["quad"] = q
        return self._cache["quad"]

    @property
    def weighted_laplacian(self) -> sp.csr_matrix:
        """diag(quad) @ laplacian: symmetric negative semidefinite, zero column sums."""
        if "wlap" not in self._cache:
            self._cache["wlap"] = (
                sp.diags(self.quad_weights) @ self.laplacian_matrix
            ).tocsr()
        return self._cache["wlap"]


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != self.grid.node_count:
            raise ValueError(
                f"field has {self.values.size} values for {self.grid.node_count} nodes"
            )

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.node_count, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        xy = grid.coords()
        return cls(grid, fn(*(xy[:, k] for k in range(grid.dim))))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass
class SupportMask:
    grid: Grid
    flags: np.ndarray

    def __post_init__(self):
        self.flags = np.asarray(self.flags, dtype=bool).ravel()
        if self.flags.size != self.grid.node_count:
            raise ValueError("mask length does not match node count")

    def count(self) -> int:
        return int(np.count_nonzero(self.flags))


def laplacian_neumann(field: ScalarField, coeff: float) -> ScalarField:
    """Apply ``coeff * Lap`` with mirror closure; constants map to zero exactly."""
    return ScalarField(field.grid, coeff * (field.grid.laplacian_matrix @ field.values))


def integrate(field: ScalarField) -> float:
    """Composite trapezoid quadrature over the box."""
    return float(field.grid.quad_weights @ field.values)


def grad_inner(f: ScalarField, g: ScalarField) -> float:
    """Discrete Dirichlet pairing ``int grad f . grad g`` on cell edges.

    Forward differences per cell with transverse trapezoid weights; satisfies
    the exact summation-by-parts identity
    ``grad_inner(f, g) == integrate(-Lap f * g)``.
    """
    grid = f.grid
    h = grid.spacing
    if grid.dim == 1:
        df = np.diff(f.values)
        dg = np.diff(g.values)
        return float(np.sum(df * dg) / h[0])
    nx, ny = grid.counts
    fv = f.values.reshape(nx, ny)
    gv = g.values.reshape(nx, ny)
    qy = _trap_1d(ny, h[1])
    qx = _trap_1d(nx, h[0])
    dxf = np.diff(fv, axis=0)
    dxg = np.diff(gv, axis=0)
    dyf = np.diff(fv, axis=1)
    dyg = np.diff(gv, axis=1)
    sx = np.sum((dxf * dxg) @ qy) / h[0]
    sy = np.sum(qx @ (dyf * dyg)) / h[1]
    return float(sx + sy)


def ball_nodes(grid: Grid, center, radius: float) -> SupportMask:
    """Nodes within Euclidean distance ``radius`` of ``center`` (inclusive)."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    xy = grid.coords()
    dist = np.linalg.norm(xy - center[None, :], axis=1)
    return SupportMask(grid, dist <= radius * (1.0 + 1e-12))


def _smallest_generalized_eig(a_sub: sp.csr_matrix, b_diag: np.ndarray,
                              tol: float, max_iter: int) -> float:
    """Smallest eigenvalue of ``A x = lam B x`` by shifted inverse power iteration.

    ``A`` symmetric positive semidefinite, ``B`` diagonal positive.  A small
    positive shift keeps the factorization nonsingular when the Neumann zero
    mode is present; the returned value is the Rayleigh quotient of the
    unshifted pencil.
    """
    n = a_sub.shape[0]
    if n == 1:
        return float(a_sub[0, 0] / b_diag[0])
    scale = float(np.max(a_sub.diagonal() / b_diag))
    sigma = max(1e-3 * scale, 1e-12)
    lu = splu((a_sub + sigma * sp.diags(b_diag)).tocsc())
    x = np.ones(n)
    x /= np.sqrt(b_diag @ x ** 2)
    lam = float(x @ (a_sub @ x))
    for _ in range(max_iter):
        x = lu.solve(b_diag * x)
        x /= np.sqrt(b_diag @ x ** 2)
        lam_new = float(x @ (a_sub @ x))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), sigma):
            return lam_new
        lam = lam_new
    return lam


def lambda1_restricted(mask: SupportMask, grid: Grid, tol: float = 1e-8) -> float:
    """First eigenvalue of -Lap on the masked nodes.

    Unmasked nodes carry an implicit zero value (discrete Dirichlet); the
    physical boundary keeps its mirror closure (discrete Neumann).  On a
    disconnected mask the minimum over connected components is returned.
    """
    idx = np.flatnonzero(mask.flags)
    if idx.size == 0:
        raise EmptySupportError("empty support")
    a_full = (-grid.weighted_laplacian).tocsr()
    a_sub = a_full[idx][:, idx].tocsr()
    b_sub = grid.quad_weights[idx]
    n_comp, labels = connected_components(a_sub, directed=False)
    best = np.inf
    for c in range(n_comp):
        sel = np.flatnonzero(labels == c)
        a_c = a_sub[sel][:, sel].tocsr()
        best = min(best, _smallest_generalized_eig(a_c, b_sub[sel], tol, max_iter=2000))
    return best
