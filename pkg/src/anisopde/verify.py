"""Self-verification suite: re-derives module invariants from scratch.

Each check returns a CheckResult; the oracles here are deliberately written
as literal, stand-alone re-evaluations (no calls into the code under test)
so a bookkeeping bug in one implementation cannot hide in both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exponents import (BOUNDARY_TOL, ProblemSpec, build_report,
                        check_condition_m, classify_indices,
                        compute_base_exponents, default_h_exp)
from .grid import GridFunction, level_measure, sobolev_ratio
from .nonlinearity import (RegularizationParams, eval_H, exp_weight_gap,
                           growth_rate, psi_n_field)
from .sampling import random_point_pairs, random_spec
from .solver import solve_regularized, stampacchia_profile


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


# ---------------------------------------------------------------------------
# independent oracle: literal transcription of the defining inequalities

def brute_force_classification(spec: ProblemSpec):
    """Classify directions by direct evaluation of the defining inequalities.

    Returns (Na, Nac, Pa, Pac, condition_m_holds) with 0-based index sets.
    """
    N = spec.N
    p = N / sum(1.0 / spec.p_vec[j] for j in range(N))
    Na, Nac, Pa, Pac = set(), set(), set(), set()
    for j in range(N):
        pj, qj, tj, aj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j], spec.a_vec[j]
        if aj * qj == 0.0:
            if tj * pj / (pj - qj) >= p:
                Na.add(j)
            else:
                Nac.add(j)
        else:
            mj = (pj - qj) / qj * (tj * pj / (pj - qj) - p)
            if mj > 1.0:
                Pa.add(j)
            else:
                Pac.add(j)
    holds = True
    for j in Na:
        pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
        if not spec.m > tj * pj / (pj - qj):
            holds = False
    for j in Pa:
        pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
        mj = (pj - qj) / qj * (tj * pj / (pj - qj) - p)
        if not spec.m > min(tj, mj):
            holds = False
    return Na, Nac, Pa, Pac, holds


def verify_exponent_oracle(seed: int = 0, count: int = 1000) -> CheckResult:
    """Sampled equivalence of the classifier with the brute-force oracle."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        spec = random_spec(rng)
        base = compute_base_exponents(spec)
        sets = classify_indices(spec, base)
        cond = check_condition_m(spec, base, sets)
        Na, Nac, Pa, Pac, holds = brute_force_classification(spec)
        if (set(sets.Na), set(sets.Nac), set(sets.Pa), set(sets.Pac)) != \
                (Na, Nac, Pa, Pac):
            return CheckResult("exponent_oracle", False,
                               f"partition mismatch at sample {i}: {spec}")
        if cond.holds != holds:
            return CheckResult("exponent_oracle", False,
                               f"condition verdict mismatch at sample {i}: {spec}")
    return CheckResult("exponent_oracle", True, f"{count} samples agree")


def verify_structural_inequalities(seed: int = 0, count: int = 500) -> CheckResult:
    """Positivity/side inequalities of the derived exponents under condition (m)."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        spec = random_spec(rng, require_condition_m=True)
        rep = build_report(spec)
        m, p = spec.m, rep.p_mean
        bad = []
        for j in rep.sets.Na:
            pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
            if not rep.xi_vec[j] > 1.0:
                bad.append(f"xi_{j + 1}={rep.xi_vec[j]}")
            if not qj * m / (m - tj) < pj:
                bad.append(f"q m/(m-theta) at j={j + 1}")
        for j in rep.sets.Nac:
            pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
            if not rep.r_vec[j] * (tj / spec.N + qj) < pj + BOUNDARY_TOL:
                bad.append(f"r_{j + 1} bound")
        for j in rep.sets.Pa2 | rep.sets.Pa2c:
            pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
            if not (tj - m * qj / pj) * rep.R_vec[j] / spec.N < pj + BOUNDARY_TOL:
                bad.append(f"R_{j + 1} bound")
        for j in rep.sets.Pa3:
            pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
            if not (tj * pj - m * qj) / (pj - qj) < m:
                bad.append(f"Pa3 bound at j={j + 1}")
        for j in rep.sets.Phat1:
            pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
            if m - tj > 0.0 and not (qj * m - pj * tj) / (m - tj) < pj:
                bad.append(f"Phat1 bound at j={j + 1}")
        if bad:
            return CheckResult("structural_inequalities", False,
                               f"sample {i}: {'; '.join(bad)}; {spec}")
    return CheckResult("structural_inequalities", True, f"{count} samples clean")


def verify_H_limit(spec: ProblemSpec, seed: int = 0, count: int = 200,
                   tol: float = 1e-6) -> CheckResult:
    """Monotone convergence of the bounded approximation and its sup bound."""
    rng = np.random.default_rng(seed)
    pts = random_point_pairs(rng, count)
    h_exp = default_h_exp(spec, compute_base_exponents(spec))
    n_ladder = [10 ** k for k in range(9)]
    worst = 0.0
    for t1, t2 in pts:
        for j in range(spec.N):
            prev = -np.inf
            for n in n_ladder:
                params = RegularizationParams(n=n, h_exp=h_exp)
                val = eval_H(j, float(t1), float(t2), params, spec)
                if val < prev - 1e-15:
                    return CheckResult(
                        "H_limit", False,
                        f"not nondecreasing in n at (t1,t2)=({t1},{t2}), j={j + 1}")
                prev = val
            exact = t1 ** (spec.theta_vec[j] - 1.0) * abs(t2) ** spec.q_vec[j]
            rel = abs(prev - exact) / exact
            worst = max(worst, rel)
            if rel >= tol:
                return CheckResult("H_limit", False,
                                   f"limit error {rel:.3e} at (t1,t2)=({t1},{t2})")
    # sup bound of the assembled approximation on random node data
    params = RegularizationParams(n=1000, h_exp=h_exp)
    u = rng.standard_normal((50,))
    g = rng.standard_normal((50, spec.N))
    sup = float(np.max(np.abs(psi_n_field(u, g, params, spec))))
    bound = spec.N * params.n ** params.h_exp
    if sup > bound:
        return CheckResult("H_limit", False, f"sup {sup} exceeds bound {bound}")
    return CheckResult("H_limit", True, f"worst relative limit error {worst:.3e}")


def verify_weight_gap(seed: int = 0, triples: int = 100, points: int = 1000,
                      rate_scale: float = 1.0) -> CheckResult:
    """The exponential-weight lower bound phi' - abar k^{m-1} phi >= 1/2.

    rate_scale < 1 deliberately weakens the quadratic rate and must make the
    check fail for large |s| (used as a negative control).
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(triples):
        k = float(rng.uniform(0.1, 5.0))
        m = float(rng.uniform(1.05, 6.0))
        abar = float(rng.uniform(0.05, 3.0))
        s = rng.uniform(-10.0 * k, 10.0 * k, size=points)
        if rate_scale == 1.0:
            gap = exp_weight_gap(s, k, m, abar)
        else:
            lam = rate_scale * growth_rate(k, m, abar)
            c = abar * k ** (m - 1.0)
            with np.errstate(over="ignore"):
                gap = np.exp(np.minimum(lam * s * s, 700.0)) \
                    * (2.0 * lam * s * s - c * s + 1.0)
        worst = min(worst, float(np.min(gap)))
    passed = worst >= 0.5 - 1e-12
    return CheckResult("weight_gap_inequality", passed, f"min gap {worst:.6e}")


def verify_sobolev_ratio(spec: ProblemSpec, grid, seed: int = 0,
                         count: int = 20) -> CheckResult:
    """Scale invariance and boundedness of the empirical Sobolev ratio."""
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(count):
        u = GridFunction(grid, rng.standard_normal(grid.nodes))
        r1 = sobolev_ratio(u, spec)
        r2 = sobolev_ratio(GridFunction(grid, 3.7 * u.values), spec)
        if not np.isfinite(r1) or abs(r1 - r2) > 1e-10 * max(1.0, r1):
            return CheckResult("sobolev_ratio", False,
                               f"scale invariance broken: {r1} vs {r2}")
        vals.append(r1)
    spread = max(vals)
    return CheckResult("sobolev_ratio", spread < 1e3,
                       f"{count} samples, max ratio {spread:.4f}")


def verify_case2_positivity(spec, bspec, grid, opts, n: int = 8) -> CheckResult:
    """Nonnegativity of the converged iterate in the nonnegative-data regime."""
    from .exponents import Case
    if spec.case_id is not Case.CASE2:
        return CheckResult("case2_positivity", True, "skipped: not Case 2")
    rep = solve_regularized(spec, bspec, n, grid, opts)
    passed = rep.converged and rep.min_value >= -1e-8
    return CheckResult("case2_positivity", passed,
                       f"converged={rep.converged}, min U={rep.min_value:.3e}")


def verify_energy_residual(spec, bspec, grid, opts, n: int = 8,
                           tol: float = 1e-6) -> CheckResult:
    """Tested-with-itself identity on a converged solve."""
    rep = solve_regularized(spec, bspec, n, grid, opts)
    passed = rep.converged and rep.energy_residual <= tol
    return CheckResult("energy_residual", passed,
                       f"converged={rep.converged}, residual={rep.energy_residual:.3e}")


def verify_stampacchia(spec, bspec, grid, opts, n: int = 8,
                       levels=None) -> CheckResult:
    """Superlevel profile sanity plus brute-force level-measure agreement."""
    rep = solve_regularized(spec, bspec, n, grid, opts)
    U = rep.U
    sup = float(np.max(np.abs(U.values)))
    if not np.isfinite(sup) or sup == 0.0:
        return CheckResult("stampacchia_profile", False, f"degenerate sup {sup}")
    if levels is None:
        levels = tuple(sup * f for f in (0.05, 0.2, 0.5, 0.8, 1.5))
    try:
        exp_rep = build_report(spec)
    except Exception:
        exp_rep = None
    prof = stampacchia_profile(U, levels, exp_rep)
    for h, mu in zip(prof.levels, prof.mu):
        count = sum(1 for v in U.flat if abs(v) >= h)  # literal node enumeration
        if mu != U.grid.cell_volume * count:
            return CheckResult("stampacchia_profile", False,
                               f"measure mismatch at level {h}")
    if max(levels) > sup and not np.isfinite(prof.first_zero_level):
        return CheckResult("stampacchia_profile", False,
                           "no vanishing level above the empirical sup")
    return CheckResult("stampacchia_profile", True,
                       f"sup={sup:.4f}, fitted exponent {prof.fitted_exponent:.3f}")


def run_verification(spec, bspec, grid, opts, seed: int = 0,
                     n: int = 8) -> list[CheckResult]:
    """The full suite for one configuration."""
    results = [
        verify_exponent_oracle(seed),
        verify_structural_inequalities(seed),
        verify_weight_gap(seed),
    ]
    try:
        compute_base_exponents(spec)
        subcritical = True
    except Exception:
        subcritical = False
    if subcritical:
        results.append(verify_H_limit(spec, seed))
        results.append(verify_sobolev_ratio(spec, grid, seed))
    results.append(verify_case2_positivity(spec, bspec, grid, opts, n))
    results.append(verify_energy_residual(spec, bspec, grid, opts, n))
    results.append(verify_stampacchia(spec, bspec, grid, opts, n))
    return results
