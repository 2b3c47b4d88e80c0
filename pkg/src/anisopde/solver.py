"""Discrete solver for the regularized approximate problems.

The outer loop is a frozen-coefficient Picard iteration: at each step the
bounded approximation of the singular term, the bounded map of the
lower-order operator, and the gradient coefficient of the absorption term
are evaluated at the current iterate and held fixed.  The remaining core
(anisotropic operator plus a monotone zero-order term) is solved by damped
Newton with an epsilon-regularized flux and Armijo backtracking.

Convergence is always measured on the true discrete weak-form residual with
the exact (unregularized) flux, so the regularization cannot silently
pollute a reported solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DivergedError, NanError, NewtonStallError, SpecError
from .exponents import ProblemSpec
from .grid import Grid, GridFunction, _flux, node_gradients, norm_Ls, pairing_A, partial, level_measure
from .nonlinearity import RegularizationParams, phi_field, psi_n_field, psi_times_u_field
from .operator_b import OperatorBSpec, rhs_field


@dataclass(frozen=True)
class SolverOptions:
    eps0: float = 1e-2              # initial flux smoothing
    eps_min: float = 1e-10          # floor of the smoothing schedule
    picard_max: int = 80
    newton_max: int = 50
    tol_residual: float = 1e-8      # relative weak-form residual stop
    relax: float = 1.0              # Picard under-relaxation in (0, 1]
    project_nonneg: bool = False    # diagnostic-only clamp, never enforced by default
    divergence_patience: int = 5
    h_exp: float | None = None      # regularization steepness override (> 1)

    def __post_init__(self):
        if self.tol_residual <= 0.0:
            raise SpecError("tol_residual must be > 0")
        if self.eps_min <= 0.0:
            raise SpecError("eps_min must be > 0")
        if not 0.0 < self.relax <= 1.0:
            raise SpecError("relax must lie in (0, 1]")


@dataclass(frozen=True)
class SolveReport:
    """Converged state and all monitored quantities for one regularization index."""

    n: int
    U: GridFunction
    norm_Lm: float
    norm_W: float
    int_phi_u: float
    int_psi_n_u: float
    int_psi_u: float
    J_m_p: tuple[float, ...]        # per-direction |u|^m |d_j u|^{p_j} integrals
    J_theta_q: tuple[float, ...]    # per-direction |u|^{theta_j} |d_j u|^{q_j} integrals
    energy_residual: float
    min_value: float
    picard_iters: int
    newton_iters: int
    converged: bool
    condition_m_holds: bool | None = None

    def monitored(self) -> dict[str, float]:
        out = {
            "norm_Lm": self.norm_Lm,
            "norm_W": self.norm_W,
            "int_phi_u": self.int_phi_u,
            "int_psi_n_u": self.int_psi_n_u,
            "int_psi_u": self.int_psi_u,
        }
        for j, v in enumerate(self.J_m_p):
            out[f"J_m_p{j + 1}"] = v
        for j, v in enumerate(self.J_theta_q):
            out[f"J_theta_q{j + 1}"] = v
        return out


class _Discretization:
    """Per-grid sparse operators and quadrature weights."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.w = grid.cell_volume
        self.D = [grid.difference_matrix(j) for j in range(grid.ndim)]
        self.shape = grid.nodes

    def anisotropic_residual(self, u_flat, p_vec, eps=0.0):
        """Nodal residual of the anisotropic operator, optionally eps-smoothed."""
        r = np.zeros_like(u_flat)
        for j, Dj in enumerate(self.D):
            d = Dj @ u_flat
            p = p_vec[j]
            if eps > 0.0:
                f = (d * d + eps * eps) ** ((p - 2.0) / 2.0) * d
            else:
                f = _flux(d, p)
            r += Dj.T @ (self.w * f)
        return r

    def anisotropic_jacobian(self, u_flat, p_vec, eps):
        blocks = None
        for j, Dj in enumerate(self.D):
            d = Dj @ u_flat
            p = p_vec[j]
            dphi = (d * d + eps * eps) ** ((p - 4.0) / 2.0) * ((p - 1.0) * d * d + eps * eps)
            term = Dj.T @ sp.diags(self.w * dphi) @ Dj
            blocks = term if blocks is None else blocks + term
        return blocks


def _signed_power(u, m):
    return np.sign(u) * np.abs(u) ** (m - 1.0)


def _true_residual(disc, u_flat, spec, bspec, params, opts):
    """Weak-form residual vector with exact flux and coefficients at u itself."""
    u_gf = GridFunction(disc.grid, u_flat.reshape(disc.shape))
    grads = node_gradients(u_gf)
    phi = phi_field(u_gf.values, grads, spec)
    r = disc.anisotropic_residual(u_flat, spec.p_vec, eps=0.0)
    r = r + disc.w * phi.reshape(-1)
    if spec.psi_enabled:
        psin = psi_n_field(u_gf.values, grads, params, spec)
        r = r - disc.w * psin.reshape(-1)
    node, edges = rhs_field(u_gf, bspec)
    b = disc.w * node.reshape(-1)
    for j, Dj in enumerate(disc.D):
        b = b + Dj.T @ (disc.w * edges[j].reshape(-1))
    r = r - b
    scale = 1.0 + float(np.linalg.norm(b)) + float(np.linalg.norm(disc.w * phi.reshape(-1)))
    return r, scale


def _newton_core(disc, u0, spec, coeff, rhs, eps, opts, tol_abs):
    """Damped Newton on the frozen monotone core A u + coeff |u|^{m-2} u = rhs."""
    m = spec.m
    u = u0.copy()

    def residual(x):
        return (disc.anisotropic_residual(x, spec.p_vec, eps=eps)
                + disc.w * coeff * _signed_power(x, m) - rhs)

    r = residual(u)
    rnorm = np.linalg.norm(r)
    iters = 0
    for _ in range(opts.newton_max):
        if rnorm <= tol_abs:
            break
        J = disc.anisotropic_jacobian(u, spec.p_vec, eps)
        dzero = (m - 1.0) * np.maximum(np.abs(u), 1e-12) ** (m - 2.0)
        J = J + sp.diags(disc.w * coeff * dzero)
        step = spla.spsolve(J.tocsc(), -r)
        t = 1.0
        while True:
            r_new = residual(u + t * step)
            rn = np.linalg.norm(r_new)
            if np.isfinite(rn) and rn <= (1.0 - 1e-4 * t) * rnorm:
                break
            t *= 0.5
            if t < 1e-12:
                if not np.all(np.isfinite(r_new)):
                    bad = np.argwhere(
                        ~np.isfinite(r_new.reshape(disc.shape)))[0]
                    raise NanError(
                        f"nan: residual overflowed at node {tuple(bad)}",
                        node=tuple(int(i) for i in bad))
                raise NewtonStallError(
                    f"newton stall: line search failed at residual {rnorm:.3e}")
        u = u + t * step
        r, rnorm = r_new, rn
        iters += 1
    return u, iters


def solve_regularized(spec: ProblemSpec, bspec: OperatorBSpec, n: int, grid: Grid,
                      opts: SolverOptions, u0: GridFunction | None = None,
                      h_exp: float | None = None,
                      condition_m_holds: bool | None = None) -> SolveReport:
    """Solve the discrete approximate problem at one regularization index.

    Solving is permitted even when the existence condition fails (for
    exploratory runs); the verdict, when known, is recorded in the report.
    """
    spec.validate()
    if h_exp is None:
        h_exp = opts.h_exp
    if h_exp is None:
        from .exponents import compute_base_exponents, default_h_exp
        try:
            h_exp = default_h_exp(spec, compute_base_exponents(spec))
        except Exception:
            h_exp = max(pj / (pj - 1.0) for pj in spec.p_vec) \
                * max(max(t, q) for t, q in zip(spec.theta_vec, spec.q_vec)) + 2.0
    params = RegularizationParams(n=n, h_exp=h_exp)
    disc = _Discretization(grid)
    u = u0.flat.copy() if u0 is not None else np.zeros(grid.size)

    newton_total = 0
    prev_res = np.inf
    grow_streak = 0
    converged = False
    res_rel = np.inf
    k = 0
    for k in range(opts.picard_max):
        eps = max(opts.eps_min, opts.eps0 * 2.0 ** (-k))
        u_gf = GridFunction(grid, u.reshape(disc.shape))
        grads = node_gradients(u_gf)
        coeff = np.ones(grid.size)
        for j in range(spec.N):
            if spec.a_vec[j] != 0.0:
                coeff += spec.a_vec[j] * np.abs(grads[..., j].reshape(-1)) ** spec.p_vec[j]
        node, edges = rhs_field(u_gf, bspec)
        rhs = disc.w * node.reshape(-1)
        for j, Dj in enumerate(disc.D):
            rhs = rhs + Dj.T @ (disc.w * edges[j].reshape(-1))
        if spec.psi_enabled:
            psin = psi_n_field(u_gf.values, grads, params, spec)
            if not np.all(np.isfinite(psin)):
                bad = np.argwhere(~np.isfinite(psin))[0]
                raise NanError(f"nan: regularized singular term overflowed at node {tuple(bad)}",
                               node=tuple(int(i) for i in bad))
            rhs = rhs + disc.w * psin.reshape(-1)

        rhs_norm = float(np.linalg.norm(rhs))
        if not np.isfinite(rhs_norm):
            bad = np.argwhere(np.abs(rhs.reshape(disc.shape))
                              == np.max(np.abs(rhs)))[0]
            raise NanError(f"nan: assembled load overflowed at node {tuple(bad)}",
                           node=tuple(int(i) for i in bad))
        tol_abs = 0.1 * opts.tol_residual * (1.0 + rhs_norm)
        u_new, nit = _newton_core(disc, u, spec, coeff, rhs, eps, opts, tol_abs)
        newton_total += nit
        u = (1.0 - opts.relax) * u + opts.relax * u_new
        if not np.all(np.isfinite(u)):
            bad = np.argwhere(~np.isfinite(u.reshape(disc.shape)))[0]
            raise NanError(f"nan: iterate overflowed at node {tuple(bad)}",
                           node=tuple(int(i) for i in bad))

        r, scale = _true_residual(disc, u, spec, bspec, params, opts)
        res_rel = float(np.linalg.norm(r)) / scale
        if res_rel <= opts.tol_residual:
            converged = True
            break
        if res_rel > prev_res * (1.0 + 1e-12):
            grow_streak += 1
            if grow_streak >= opts.divergence_patience:
                raise DivergedError(
                    f"diverged: residual grew {grow_streak} consecutive outer steps "
                    f"(last {res_rel:.3e})")
        else:
            grow_streak = 0
        prev_res = res_rel

    vals = u.reshape(disc.shape)
    if opts.project_nonneg:
        vals = np.maximum(vals, 0.0)  # diagnostic only; default is off
    U = GridFunction(grid, vals)
    return _report(U, spec, bspec, params, n, k + 1, newton_total, converged,
                   condition_m_holds)


def _report(U, spec, bspec, params, n, picard_iters, newton_iters, converged,
            condition_m_holds):
    grads = node_gradients(U)
    w = U.grid.cell_volume
    phi = phi_field(U.values, grads, spec)
    psin = psi_n_field(U.values, grads, params, spec) if spec.psi_enabled \
        else np.zeros_like(U.values)
    psi_u = psi_times_u_field(U.values, grads, spec)
    J_m_p = tuple(
        float(w * np.sum(np.abs(U.values) ** spec.m * np.abs(grads[..., j]) ** spec.p_vec[j]))
        for j in range(spec.N))
    J_theta_q = tuple(
        float(w * np.sum(np.abs(U.values) ** spec.theta_vec[j]
                         * np.abs(grads[..., j]) ** spec.q_vec[j]))
        for j in range(spec.N))
    return SolveReport(
        n=n, U=U,
        norm_Lm=norm_Ls(U, spec.m),
        norm_W=sum(norm_Ls(partial(U, j), spec.p_vec[j], U.grid) for j in range(spec.N)),
        int_phi_u=float(w * np.sum(phi * U.values)),
        int_psi_n_u=float(w * np.sum(psin * U.values)),
        int_psi_u=float(w * np.sum(psi_u)),
        J_m_p=J_m_p, J_theta_q=J_theta_q,
        energy_residual=energy_identity_residual(U, spec, bspec, params),
        min_value=float(np.min(U.values)),
        picard_iters=picard_iters, newton_iters=newton_iters,
        converged=converged, condition_m_holds=condition_m_holds,
    )


def energy_identity_residual(U: GridFunction, spec: ProblemSpec,
                             bspec: OperatorBSpec,
                             params: RegularizationParams | None = None) -> float:
    """Relative defect of the tested-with-itself identity.

    With params the regularized approximation of the singular term is used;
    without, the limit form restricted to the nonzero set.
    """
    from .operator_b import eval_B
    grads = node_gradients(U)
    w = U.grid.cell_volume
    a_uu = pairing_A(U, U, spec)
    phi_u = float(w * np.sum(phi_field(U.values, grads, spec) * U.values))
    if not spec.psi_enabled:
        psi_term = 0.0
    elif params is not None:
        psi_term = float(w * np.sum(psi_n_field(U.values, grads, params, spec) * U.values))
    else:
        psi_term = float(w * np.sum(psi_times_u_field(U.values, grads, spec)))
    b_uu = eval_B(U, U, bspec)
    return abs(a_uu + phi_u - psi_term - b_uu) / (1.0 + abs(a_uu))


@dataclass(frozen=True)
class SequenceReport:
    """Per-index reports plus stabilization diagnostics across the sweep."""

    reports: tuple[SolveReport | None, ...]
    n_list: tuple[int, ...]
    errors: tuple[str | None, ...]
    diff_W: tuple[float, ...]               # ||U_{k+1} - U_k||_W between entries
    rel_changes: tuple[dict[str, float], ...]
    uniform_bound_plausible: bool
    no_uniform_bound: bool
    stabilization_threshold: float


def run_sequence(spec: ProblemSpec, bspec: OperatorBSpec, grid: Grid,
                 opts: SolverOptions, n_list,
                 stabilization_threshold: float = 0.05,
                 condition_m_holds: bool | None = None) -> SequenceReport:
    """Drive the regularization index upward, warm-starting each solve.

    Per-entry failures are recorded and the sweep continues from the last
    good iterate.  The stabilization threshold is a harness convention, not
    a claim of the underlying theory.
    """
    n_list = tuple(int(n) for n in n_list)
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise SpecError("n_list must be nonempty and strictly increasing")
    reports: list[SolveReport | None] = []
    errors: list[str | None] = []
    warm = None
    for n in n_list:
        try:
            rep = solve_regularized(spec, bspec, n, grid, opts, u0=warm,
                                    condition_m_holds=condition_m_holds)
            reports.append(rep)
            errors.append(None)
            warm = rep.U
        except Exception as exc:  # propagate per entry without aborting
            reports.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")

    diff_W = []
    rel_changes = []
    good = [(i, r) for i, r in enumerate(reports) if r is not None]
    for (_, r0), (_, r1) in zip(good, good[1:]):
        dv = GridFunction(grid, r1.U.values - r0.U.values)
        diff_W.append(sum(norm_Ls(partial(dv, j), spec.p_vec[j], grid)
                          for j in range(grid.ndim)))
        m0, m1 = r0.monitored(), r1.monitored()
        rel_changes.append({key: abs(m1[key] - m0[key]) / (abs(m0[key]) + 1e-30)
                            for key in m0})

    plausible = (len(rel_changes) >= 1
                 and all(v <= stabilization_threshold for v in rel_changes[-1].values()))
    growing = (len(rel_changes) >= 2 and not plausible
               and _monotone_growth(good))
    return SequenceReport(
        reports=tuple(reports), n_list=n_list, errors=tuple(errors),
        diff_W=tuple(diff_W), rel_changes=tuple(rel_changes),
        uniform_bound_plausible=plausible, no_uniform_bound=growing,
        stabilization_threshold=stabilization_threshold,
    )


def _monotone_growth(good):
    series = [r.norm_W + r.norm_Lm for _, r in good]
    return all(b > a for a, b in zip(series, series[1:]))


@dataclass(frozen=True)
class ProfileReport:
    levels: tuple[float, ...]
    mu: tuple[float, ...]
    fitted_exponent: float          # nan when too few nonzero-measure pairs
    predicted_gamma: float
    sup_estimate: float             # empirical max |U|
    first_zero_level: float         # smallest supplied level with mu = 0, inf if none


def stampacchia_profile(U: GridFunction, levels, report) -> ProfileReport:
    """Superlevel-measure profile and a pairwise decay-exponent fit.

    The fitted exponent is the least-squares slope of log mu(l) against
    log mu(h) over consecutive level pairs with positive measures, matching
    the decay template's dependence on the lower level.
    """
    levels = tuple(float(l) for l in levels)
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] <= 0.0:
        raise SpecError("levels must be positive and increasing")
    mu = tuple(level_measure(U, h) for h in levels)
    if mu[0] == 0.0:
        raise SpecError("degenerate profile: zero measure at the smallest level")
    xs, ys = [], []
    for (h, l), (mh, ml) in zip(zip(levels, levels[1:]), zip(mu, mu[1:])):
        if mh > 0.0 and ml > 0.0:
            xs.append(np.log(mh))
            ys.append(np.log(ml))
    if len(xs) >= 2 and max(xs) - min(xs) > 1e-12:
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = float("nan")
    zero_levels = [h for h, v in zip(levels, mu) if v == 0.0]
    return ProfileReport(
        levels=levels, mu=mu, fitted_exponent=slope,
        predicted_gamma=getattr(report, "gamma_abar", float("nan")),
        sup_estimate=float(np.max(np.abs(U.values))),
        first_zero_level=min(zero_levels) if zero_levels else float("inf"),
    )
