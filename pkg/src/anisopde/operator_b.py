"""Concrete lower-order operator: source term, divergence-form functional,
bounded nonlinear map, and optional truncated datum.

The divergence-form part is represented by per-axis edge fields G_j with
<g, v> = sum_j (w-weighted) sum G_j d_j v, which spans the whole discrete
dual space and makes "a0 > 0" a structural switch (some G_j nonzero).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SpecError
from .exponents import Case, ProblemSpec
from .grid import Grid, GridFunction, anisotropic_norm, norm_Ls, partial


# ---------------------------------------------------------------------------
# bounded nonlinear maps

def make_psi_map(name: str, c: float = 1.0, cap: float = 1.0):
    """Named bounded map u -> node field, with its uniform bound.

    Built-ins: 'zero'; 'saturating' c*u/(1+|u|); 'capped' c*T_cap(u)/cap;
    'saturating_abs' c*|u|/(1+|u|) (the sign-free variant needed for
    nonnegative configurations).
    Returns (callable, bound).
    """
    if name == "zero":
        return (lambda u: np.zeros_like(u.values)), 0.0
    if name == "saturating":
        return (lambda u: c * u.values / (1.0 + np.abs(u.values))), abs(c)
    if name == "saturating_abs":
        return (lambda u: c * np.abs(u.values) / (1.0 + np.abs(u.values))), abs(c)
    if name == "capped":
        if cap <= 0.0:
            raise SpecError(f"invalid cap={cap} for capped psi map")
        return (lambda u: c * np.clip(u.values, -cap, cap) / cap), abs(c)
    raise SpecError(f"unknown psi map {name!r}")


@dataclass(frozen=True)
class OperatorBSpec:
    """Data of the lower-order operator on one grid."""

    F: GridFunction
    G: tuple[np.ndarray, ...] | None          # per-axis edge fields, None = zero
    psi_name: str = "zero"
    psi_map: Callable[[GridFunction], np.ndarray] = field(default=None)
    psi_bound: float = 0.0
    f_datum: GridFunction | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.psi_map is None:
            pm, bound = make_psi_map(self.psi_name)
            object.__setattr__(self, "psi_map", pm)
            object.__setattr__(self, "psi_bound", bound)

    @property
    def a0_flag(self) -> bool:
        return self.G is not None and any(np.any(g) for g in self.G)

    def validate(self, spec: ProblemSpec) -> None:
        """Check the sign requirements of the nonnegative-solution regime and
        the nontriviality of the operator at zero."""
        if spec.case_id is Case.CASE2:
            if np.any(self.F.values < 0.0):
                raise SpecError("Case 2 requires F >= 0")
            if self.a0_flag:
                raise SpecError("Case 2 requires G == 0")
            if self.f_datum is not None and np.any(self.f_datum.values < 0.0):
                raise SpecError("Case 2 requires f >= 0")
            # probe with signed data; a valid map must stay nonnegative either way
            for probe in (self.F, GridFunction(self.F.grid, -self.F.values - 1.0)):
                if np.any(self.psi_map(probe) < 0.0):
                    raise SpecError("Case 2 requires a pointwise nonnegative psi map")
        zero = GridFunction.zeros(self.F.grid)
        node0, edges0 = rhs_field(zero, self)
        if not (np.any(node0) or any(np.any(e) for e in edges0)):
            raise SpecError("operator is trivial at zero (B0 == 0)")


def eval_B(u: GridFunction, v: GridFunction, bspec: OperatorBSpec) -> float:
    """<B u, v>: source + divergence-form + bounded map + optional datum."""
    if u.grid != v.grid or bspec.F.grid != u.grid:
        from .errors import GridMismatchError
        raise GridMismatchError("grid mismatch in eval_B")
    w = u.grid.cell_volume
    node = bspec.F.values + bspec.psi_map(u)
    if bspec.f_datum is not None:
        node = node + bspec.f_datum.values
    total = w * float(np.sum(node * v.values))
    if bspec.G is not None:
        for j, gj in enumerate(bspec.G):
            total += w * float(np.sum(gj * partial(v, j)))
    return total


def rhs_field(u: GridFunction, bspec: OperatorBSpec):
    """Riesz data of B at u: node field F + psi(u) + f and the edge fields G_j.

    Pairing these against any v reproduces eval_B(u, v) exactly.
    """
    node = bspec.F.values + bspec.psi_map(u)
    if bspec.f_datum is not None:
        node = node + bspec.f_datum.values
    grid = u.grid
    if bspec.G is not None:
        edges = tuple(np.asarray(g, dtype=float) for g in bspec.G)
    else:
        edges = tuple(np.zeros(_edge_shape(grid, j)) for j in range(grid.ndim))
    return node, edges


def _edge_shape(grid: Grid, axis: int):
    shape = list(grid.nodes)
    shape[axis] += 1
    return tuple(shape)


def truncate_datum(f: GridFunction, n: int) -> GridFunction:
    """Clamp the datum at height n (the approximating data of the general case)."""
    if n < 1:
        raise SpecError(f"n={n} must be >= 1")
    return GridFunction(f.grid, np.clip(f.values, -n, n))


@dataclass(frozen=True)
class EmpiricalP1:
    C_emp: float
    b_used: float
    s_used: float
    max_violation: float
    trivial: bool = False


def check_P1(bspec: OperatorBSpec, spec: ProblemSpec, samples: int,
             rng=None, configured_C: float | None = None) -> EmpiricalP1:
    """Empirically fit the growth-bound constant over random (u, v) pairs.

    Reports the smallest constant making |<Bu, v>| <= C (1 + ||u||_W^b)
    (a0 ||v||_W + ||v||_{L^s}) over the sample, and the worst violation of a
    configured constant if one is given.
    """
    if samples < 1:
        raise SpecError("samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    grid = bspec.F.grid
    a0_ind = 1.0 if bspec.a0_flag else 0.0
    c_emp = 0.0
    for _ in range(samples):
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        v = GridFunction(grid, rng.standard_normal(grid.nodes))
        val = abs(eval_B(u, v, bspec))
        denom = ((1.0 + anisotropic_norm(u, spec) ** spec.b_exp)
                 * (a0_ind * anisotropic_norm(v, spec) + norm_Ls(v, spec.s_exp)))
        c_emp = max(c_emp, val / denom)
    violation = max(0.0, c_emp - configured_C) if configured_C is not None else 0.0
    return EmpiricalP1(C_emp=c_emp, b_used=spec.b_exp, s_used=spec.s_exp,
                       max_violation=violation, trivial=(c_emp == 0.0))


# ---------------------------------------------------------------------------
# analytic presets for node and edge data

def node_preset(grid: Grid, name: str, amplitude: float = 1.0) -> GridFunction:
    """Named analytic node fields: 'constant', 'product_of_sines', 'bump'."""
    if name == "constant":
        return GridFunction(grid, np.full(grid.nodes, amplitude))
    if name == "product_of_sines":
        def f(*coords):
            out = np.full_like(coords[0], amplitude)
            for x, L in zip(coords, grid.extents):
                out = out * np.sin(np.pi * x / L)
            return out
        return GridFunction.from_callable(grid, f)
    if name == "bump":
        # indicator of the centered half-size box
        def f(*coords):
            inside = np.ones_like(coords[0], dtype=bool)
            for x, L in zip(coords, grid.extents):
                inside &= (x >= L / 4) & (x <= 3 * L / 4)
            return amplitude * inside.astype(float)
        return GridFunction.from_callable(grid, f)
    raise SpecError(f"unknown node preset {name!r}")


def edge_preset(grid: Grid, name: str, amplitudes) -> tuple[np.ndarray, ...]:
    """Named edge fields for the divergence-form part; 'constant' only."""
    if name == "constant":
        return tuple(np.full(_edge_shape(grid, j), a)
                     for j, a in enumerate(amplitudes))
    raise SpecError(f"unknown edge preset {name!r}")
