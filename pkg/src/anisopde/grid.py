"""Discrete function space on rectangular boxes with zero Dirichlet boundary.

Values live on interior nodes of a uniform tensor grid; first differences
live on staggered edge arrays with one extra layer along their axis, so the
edge cells tile the full box length in that direction.  Quadrature is one
point per cell with weight equal to the cell volume, matching the order of
the difference scheme.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatchError, SpecError
from .exponents import ProblemSpec


@dataclass(frozen=True)
class Grid:
    """Rectangular box with per-axis interval lengths and interior node counts."""

    extents: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.extents) != len(self.nodes):
            raise SpecError("extents and nodes must have the same length")
        if any(L <= 0.0 for L in self.extents):
            raise SpecError(f"extents must be positive, got {self.extents}")
        if any(n < 1 for n in self.nodes):
            raise SpecError(f"node counts must be >= 1, got {self.nodes}")

    @property
    def ndim(self) -> int:
        return len(self.nodes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n + 1) for L, n in zip(self.extents, self.nodes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure_omega(self) -> float:
        return float(np.prod(self.extents))

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes))

    def axis_coords(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return h * np.arange(1, self.nodes[axis] + 1)

    def meshgrid(self):
        return np.meshgrid(*(self.axis_coords(j) for j in range(self.ndim)),
                           indexing="ij")

    def difference_matrix(self, axis: int) -> sp.csr_matrix:
        """Sparse forward-difference operator from nodes to axis edges (C order)."""
        return _difference_matrix(self.nodes, self.spacing, axis)


@lru_cache(maxsize=64)
def _difference_matrix(nodes, spacing, axis):
    n = nodes[axis]
    h = spacing[axis]
    # (n+1) x n bidiagonal: row e = (u_e - u_{e-1}) / h with zero boundary values
    main = sp.diags([1.0], [0], shape=(n + 1, n))
    lower = sp.diags([-1.0], [-1], shape=(n + 1, n))
    d1 = (main + lower) / h
    pre = int(np.prod(nodes[:axis], dtype=np.int64)) if axis > 0 else 1
    post = int(np.prod(nodes[axis + 1:], dtype=np.int64)) if axis < len(nodes) - 1 else 1
    return sp.kron(sp.identity(pre), sp.kron(d1, sp.identity(post))).tocsr()


@dataclass(frozen=True)
class GridFunction:
    """Interior-node values with implicit zero trace; immutable after construction."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.nodes:
            vals = vals.reshape(self.grid.nodes)
        if not np.all(np.isfinite(vals)):
            raise SpecError("grid function values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.nodes))

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        return cls(grid, f(*grid.meshgrid()))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def to_csv(self, path) -> None:
        """One row per node: multi-index (1-based), coordinates, value."""
        coords = [g.reshape(-1) for g in self.grid.meshgrid()]
        idx = np.indices(self.grid.nodes).reshape(self.grid.ndim, -1)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"i{a + 1}" for a in range(self.grid.ndim)]
                            + [f"x{a + 1}" for a in range(self.grid.ndim)] + ["value"])
            for k, v in enumerate(self.flat):
                writer.writerow([str(idx[a, k] + 1) for a in range(self.grid.ndim)]
                                + [f"{coords[a][k]:.17g}" for a in range(self.grid.ndim)]
                                + [f"{v:.17g}"])

    @classmethod
    def from_csv(cls, grid: Grid, path) -> "GridFunction":
        vals = np.zeros(grid.nodes)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                idx = tuple(int(row[a]) - 1 for a in range(grid.ndim))
                vals[idx] = float(row[-1])
        return cls(grid, vals)


def _check_same_grid(u: GridFunction, v: GridFunction):
    if u.grid != v.grid:
        raise GridMismatchError("grid mismatch between operands")


def partial(u: GridFunction, axis: int) -> np.ndarray:
    """Forward differences along one axis, one-sided into the zero boundary.

    The result has one extra layer along that axis (one value per edge).
    """
    pad = [(0, 0)] * u.grid.ndim
    pad[axis] = (1, 1)
    padded = np.pad(u.values, pad)
    return np.diff(padded, axis=axis) / u.grid.spacing[axis]


def node_gradients(u: GridFunction) -> np.ndarray:
    """Per-node derivative estimates: average of the two adjacent edge differences.

    Returns shape nodes + (ndim,).
    """
    out = np.empty(u.grid.nodes + (u.grid.ndim,))
    for j in range(u.grid.ndim):
        e = partial(u, j)
        lo = [slice(None)] * u.grid.ndim
        hi = [slice(None)] * u.grid.ndim
        lo[j] = slice(0, -1)
        hi[j] = slice(1, None)
        out[..., j] = 0.5 * (e[tuple(lo)] + e[tuple(hi)])
    return out


def norm_Ls(u, s: float, grid: Grid | None = None) -> float:
    """Discrete L^s norm of a grid function or an edge field.

    Edge fields are plain arrays and need the grid passed explicitly; each
    edge cell carries the same volume as a node cell.
    """
    if s < 1.0:
        raise SpecError(f"invalid exponent: s={s} must be >= 1")
    if isinstance(u, GridFunction):
        grid = u.grid
        vals = u.values
    else:
        if grid is None:
            raise SpecError("edge fields require an explicit grid")
        vals = np.asarray(u)
    return float((grid.cell_volume * np.sum(np.abs(vals) ** s)) ** (1.0 / s))


def anisotropic_norm(u: GridFunction, spec: ProblemSpec) -> float:
    """Sum over directions of the L^{p_j} norms of the first differences."""
    return sum(norm_Ls(partial(u, j), spec.p_vec[j], u.grid)
               for j in range(u.grid.ndim))


def _flux(d, p):
    """|d|^{p-2} d with the value 0 at d = 0 (covers p < 2)."""
    out = np.zeros_like(d)
    nz = d != 0.0
    out[nz] = np.abs(d[nz]) ** (p - 2.0) * d[nz]
    return out


def pairing_A(u: GridFunction, v: GridFunction, spec: ProblemSpec) -> float:
    """Duality pairing of the anisotropic operator applied to u against v."""
    _check_same_grid(u, v)
    w = u.grid.cell_volume
    total = 0.0
    for j in range(u.grid.ndim):
        du = partial(u, j)
        dv = partial(v, j)
        total += w * float(np.sum(_flux(du, spec.p_vec[j]) * dv))
    return total


def level_measure(u: GridFunction, h: float) -> float:
    """Quadrature measure of the superlevel set {|u| >= h}."""
    if h <= 0.0:
        raise SpecError(f"invalid level: h={h} must be > 0")
    return u.grid.cell_volume * int(np.count_nonzero(np.abs(u.values) >= h))


def sobolev_ratio(u: GridFunction, spec: ProblemSpec) -> float:
    """Empirical constant ||u||_{p*} / prod_j ||d_j u||_{p_j}^{1/N}."""
    if not np.any(u.values):
        raise SpecError("zero function")
    from .exponents import compute_base_exponents
    base = compute_base_exponents(spec)
    num = norm_Ls(u, base.p_star)
    den = 1.0
    for j in range(u.grid.ndim):
        den *= norm_Ls(partial(u, j), spec.p_vec[j], u.grid) ** (1.0 / spec.N)
    return num / den
