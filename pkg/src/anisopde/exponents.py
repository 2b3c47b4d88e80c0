"""Exponent calculus for the anisotropic problem.

Everything here is pure arithmetic on the continuous-problem parameters:
harmonic-mean and Sobolev exponents, the index partitions that sort each
coordinate direction by how its singular term is absorbed, the strict
existence condition on the absorption exponent, and the derived exponents
feeding the level-set decay estimates.

All index sets use 0-based positions internally; report emission converts
to the 1-based labels used in the mathematical write-ups.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import ConditionMError, SpecError, SupercriticalError

#: comparisons closer than this to a strict threshold get a boundary warning
BOUNDARY_TOL = 1e-12


class Case(enum.Enum):
    """Non-singular (all theta_j >= 1) vs mildly singular regime."""

    CASE1 = "Case1"
    CASE2 = "Case2"


@dataclass(frozen=True)
class ProblemSpec:
    """All continuous-problem parameters.

    Vectors are per coordinate direction (length N).  ``a0``, ``b_exp`` and
    ``s_exp`` are the structural constants of the lower-order operator's
    growth bound; ``psi_enabled`` toggles the singular gradient term for
    sanity configurations.
    """

    N: int
    p_vec: tuple[float, ...]
    q_vec: tuple[float, ...]
    theta_vec: tuple[float, ...]
    a_vec: tuple[float, ...]
    m: float
    a0: float = 0.0
    b_exp: float = 0.5
    s_exp: float = 2.0
    psi_enabled: bool = True

    @property
    def case_id(self) -> Case:
        return Case.CASE1 if all(t >= 1.0 for t in self.theta_vec) else Case.CASE2

    def validate(self) -> None:
        """Check every field-level invariant; raise SpecError on the first violation.

        The subcritical requirement (harmonic mean < N) is deliberately not
        checked here; ``compute_base_exponents`` is the operation that decides it.
        """
        if self.N < 2:
            raise SpecError(f"N must be >= 2, got {self.N}")
        for name, vec in (("p_vec", self.p_vec), ("q_vec", self.q_vec),
                          ("theta_vec", self.theta_vec), ("a_vec", self.a_vec)):
            if len(vec) != self.N:
                raise SpecError(f"{name} must have length N={self.N}, got {len(vec)}")
        for j, pj in enumerate(self.p_vec):
            if pj <= 1.0:
                raise SpecError(f"invalid exponent: p_vec[{j}]={pj} must be > 1")
        for j, (qj, pj) in enumerate(zip(self.q_vec, self.p_vec)):
            if not 0.0 <= qj < pj:
                raise SpecError(f"q_vec[{j}]={qj} must satisfy 0 <= q < p_vec[{j}]={pj}")
        for j, tj in enumerate(self.theta_vec):
            if tj <= 0.0:
                raise SpecError(f"theta_vec[{j}]={tj} must be > 0")
        for j, aj in enumerate(self.a_vec):
            if aj < 0.0:
                raise SpecError(f"a_vec[{j}]={aj} must be >= 0")
        if self.m <= 1.0:
            raise SpecError(f"m={self.m} must be > 1")
        if self.a0 < 0.0:
            raise SpecError(f"a0={self.a0} must be >= 0")
        p1 = self.p_vec[0]
        if self.a0 > 0.0:
            if not 0.0 < self.b_exp < p1 - 1.0:
                raise SpecError(
                    f"b_exp={self.b_exp} must lie in (0, p_1-1)=(0, {p1 - 1.0}) when a0 > 0")
        else:
            pm = harmonic_mean(self.p_vec)
            p_conj = pm / (pm - 1.0)
            if not 0.0 < self.b_exp < p1 / p_conj:
                raise SpecError(
                    f"b_exp={self.b_exp} must lie in (0, p_1/p')=(0, {p1 / p_conj}) when a0 = 0")
        if self.s_exp < 1.0:
            raise SpecError(f"s_exp={self.s_exp} must be >= 1")


def harmonic_mean(p_vec) -> float:
    return len(p_vec) / sum(1.0 / pj for pj in p_vec)


@dataclass(frozen=True)
class BaseExponents:
    p_mean: float
    p_star: float
    p_conj: float                   # conjugate of the harmonic mean
    p_conj_vec: tuple[float, ...]
    abar: float


def compute_base_exponents(spec: ProblemSpec) -> BaseExponents:
    """Harmonic mean, Sobolev exponent, conjugate exponents and max coefficient.

    Raises SupercriticalError when the harmonic mean reaches the dimension,
    and SpecError ("invalid exponent") when some p_j <= 1.
    """
    for j, pj in enumerate(spec.p_vec):
        if pj <= 1.0:
            raise SpecError(f"invalid exponent: p_vec[{j}]={pj} must be > 1")
    p = harmonic_mean(spec.p_vec)
    if p >= spec.N:
        raise SupercriticalError(
            f"supercritical: harmonic mean p={p} >= N={spec.N}, Sobolev exponent undefined")
    return BaseExponents(
        p_mean=p,
        p_star=spec.N * p / (spec.N - p),
        p_conj=p / (p - 1.0),
        p_conj_vec=tuple(pj / (pj - 1.0) for pj in spec.p_vec),
        abar=max(spec.a_vec),
    )


@dataclass(frozen=True)
class IndexSets:
    """Partition of directions by how the singular term gets absorbed.

    Na/Nac split the directions with a_j*q_j = 0 by whether the singular
    exponent ratio reaches the harmonic mean; Pa/Pac split a_j*q_j > 0 by the
    absorption margin m_j.  Phat1/Pa2/Pa3/Pa2c refine Pa u Pac by the size of
    the absorption exponent, and J1/J2 split by theta_j >= 1.
    """

    N: int
    Na: frozenset[int]
    Nac: frozenset[int]
    Pa: frozenset[int]
    Pac: frozenset[int]
    J1: frozenset[int]
    J2: frozenset[int]
    Phat1: frozenset[int]
    Pa2: frozenset[int]
    Pa3: frozenset[int]
    Pa2c: frozenset[int]
    boundary_warnings: tuple[str, ...] = ()


def absorption_margin(spec: ProblemSpec, base: BaseExponents, j: int) -> float:
    """m_j = ((p_j-q_j)/q_j) * (theta_j p_j/(p_j-q_j) - p); requires q_j > 0."""
    pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
    return (pj - qj) / qj * (tj * pj / (pj - qj) - base.p_mean)


def classify_indices(spec: ProblemSpec, base: BaseExponents) -> IndexSets:
    """Assign every direction to its partition cell.

    Comparisons are exact; ties within BOUNDARY_TOL of a threshold are
    additionally recorded as boundary warnings.
    """
    Na, Nac, Pa, Pac = set(), set(), set(), set()
    warnings = []
    p = base.p_mean
    for j in range(spec.N):
        pj, qj, tj, aj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j], spec.a_vec[j]
        ratio = tj * pj / (pj - qj)
        if aj * qj == 0.0:
            if abs(ratio - p) < BOUNDARY_TOL:
                warnings.append(f"j={j}: theta_j p_j/(p_j-q_j)={ratio} is within tol of p={p}")
            (Na if ratio >= p else Nac).add(j)
        else:
            mj = absorption_margin(spec, base, j)
            if abs(mj - 1.0) < BOUNDARY_TOL:
                warnings.append(f"j={j}: m_j={mj} is within tol of 1")
            (Pa if mj > 1.0 else Pac).add(j)

    Phat1, Pa2, Pa3, Pa2c = set(), set(), set(), set()
    for j in Pa | Pac:
        pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
        cutoff = pj * tj / qj
        if abs(spec.m - cutoff) < BOUNDARY_TOL:
            warnings.append(f"j={j}: m={spec.m} is within tol of p_j theta_j/q_j={cutoff}")
        if spec.m >= cutoff:
            Phat1.add(j)
        elif j in Pac:
            Pa2c.add(j)
        elif tj < p:
            Pa2.add(j)
        else:
            Pa3.add(j)

    J1 = frozenset(j for j in range(spec.N) if spec.theta_vec[j] >= 1.0)
    return IndexSets(
        N=spec.N,
        Na=frozenset(Na), Nac=frozenset(Nac),
        Pa=frozenset(Pa), Pac=frozenset(Pac),
        J1=J1, J2=frozenset(range(spec.N)) - J1,
        Phat1=frozenset(Phat1), Pa2=frozenset(Pa2),
        Pa3=frozenset(Pa3), Pa2c=frozenset(Pa2c),
        boundary_warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    #: one (direction, required strict lower bound on m) entry per active constraint
    binding: tuple[tuple[int, float], ...]
    boundary_warnings: tuple[str, ...] = ()


def check_condition_m(spec: ProblemSpec, base: BaseExponents, sets: IndexSets) -> ConditionReport:
    """Decide the strict existence condition on the absorption exponent.

    m must strictly exceed theta_j p_j/(p_j-q_j) for every j in Na and
    min{theta_j, m_j} for every j in Pa; empty sets impose nothing.
    """
    binding = []
    warnings = []
    for j in sorted(sets.Na):
        pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
        binding.append((j, tj * pj / (pj - qj)))
    for j in sorted(sets.Pa):
        mj = absorption_margin(spec, base, j)
        binding.append((j, min(spec.theta_vec[j], mj)))
    holds = all(spec.m > thr for _, thr in binding)
    for j, thr in binding:
        if abs(spec.m - thr) < BOUNDARY_TOL:
            warnings.append(f"j={j}: m={spec.m} is within tol of threshold {thr}")
    return ConditionReport(holds=holds, binding=tuple(binding),
                           boundary_warnings=tuple(warnings))


class RMode(enum.Enum):
    """Integrability class of admissible test functions."""

    LM = "Lm"
    LINFTY = "Linfty"


@dataclass(frozen=True)
class ExponentReport:
    """Every derived exponent plus the existence-condition verdict."""

    p_mean: float
    p_star: float
    p_conj: float
    p_conj_vec: tuple[float, ...]
    abar: float
    sets: IndexSets
    mj_vec: tuple[float | None, ...]
    xi_vec: dict[int, float]        # keyed by j in Na
    r_vec: dict[int, float]         # keyed by j in Nac
    R_vec: dict[int, float]         # keyed by j in Pa2 u Pa2c
    gamma0: float
    gamma_abar: float
    theta_abar_low: float           # branch for ||u||_{L^m} <= 1
    theta_abar_high: float
    condition_m_holds: bool
    binding: tuple[tuple[int, float], ...]
    r_mode: RMode
    h_exp: float
    boundary_warnings: tuple[str, ...] = ()

    def to_keyvalues(self) -> str:
        """Flat key=value text block, one entry per line, 1-based direction labels."""
        lines = [
            f"p_mean={self.p_mean!r}",
            f"p_star={self.p_star!r}",
            f"p_conj={self.p_conj!r}",
            f"abar={self.abar!r}",
            f"condition_m_holds={self.condition_m_holds}",
            f"r_mode={self.r_mode.value}",
            f"gamma0={self.gamma0!r}",
            f"gamma_abar={self.gamma_abar!r}",
            f"theta_abar_low={self.theta_abar_low!r}",
            f"theta_abar_high={self.theta_abar_high!r}",
            f"h_exp={self.h_exp!r}",
        ]
        for name in ("Na", "Nac", "Pa", "Pac", "J1", "J2", "Phat1", "Pa2", "Pa3", "Pa2c"):
            members = sorted(getattr(self.sets, name))
            lines.append(f"{name}={','.join(str(j + 1) for j in members)}")
        for j, val in enumerate(self.mj_vec):
            if val is not None:
                lines.append(f"m_{j + 1}={val!r}")
        for label, d in (("xi", self.xi_vec), ("r", self.r_vec), ("R", self.R_vec)):
            for j in sorted(d):
                lines.append(f"{label}_{j + 1}={d[j]!r}")
        for j, thr in self.binding:
            lines.append(f"binding_{j + 1}={thr!r}")
        for w in self.boundary_warnings:
            lines.append(f"boundary_warning={w}")
        return "\n".join(lines) + "\n"

    def csv_header(self) -> list[str]:
        return ["p_mean", "p_star", "p_conj", "abar", "condition_m_holds", "r_mode",
                "gamma0", "gamma_abar", "theta_abar_low", "theta_abar_high", "h_exp",
                "Na", "Nac", "Pa", "Pac"]

    def csv_row(self) -> list[str]:
        def setcol(name):
            return ";".join(str(j + 1) for j in sorted(getattr(self.sets, name)))
        return [f"{self.p_mean:.17g}", f"{self.p_star:.17g}", f"{self.p_conj:.17g}",
                f"{self.abar:.17g}", str(self.condition_m_holds), self.r_mode.value,
                f"{self.gamma0:.17g}", f"{self.gamma_abar:.17g}",
                f"{self.theta_abar_low:.17g}", f"{self.theta_abar_high:.17g}",
                f"{self.h_exp:.17g}",
                setcol("Na"), setcol("Nac"), setcol("Pa"), setcol("Pac")]


def default_h_exp(spec: ProblemSpec, base: BaseExponents) -> float:
    """Regularization steepness: large enough to keep the bounded approximations
    in the dual integrability class, while staying finite."""
    return max(base.p_conj_vec) * max(max(t, q) for t, q in zip(spec.theta_vec, spec.q_vec)) + 2.0


def derived_exponents(spec: ProblemSpec, base: BaseExponents, sets: IndexSets,
                      condition: ConditionReport | None = None) -> ExponentReport:
    """All derived exponents; requires the existence condition to hold."""
    if condition is None:
        condition = check_condition_m(spec, base, sets)
    if not condition.holds:
        raise ConditionMError(
            "condition (m) violated: derived exponents lose positivity; "
            f"binding constraints: {condition.binding}")
    if not spec.s_exp < base.p_star:
        raise SpecError(f"s_exp={spec.s_exp} must be < p_star={base.p_star}")

    p, N, m = base.p_mean, spec.N, spec.m
    mj_vec: list[float | None] = []
    for j in range(N):
        if spec.a_vec[j] * spec.q_vec[j] > 0.0:
            mj_vec.append(absorption_margin(spec, base, j))
        else:
            mj_vec.append(None)

    xi_vec = {}
    for j in sets.Na:
        inv = 1.0 - spec.theta_vec[j] / m - spec.q_vec[j] / spec.p_vec[j]
        xi_vec[j] = 1.0 / inv
    r_vec = {}
    for j in sets.Nac:
        r_vec[j] = 1.0 / (1.0 - spec.theta_vec[j] / N * (N / p - 1.0 / spec.p_vec[j]))
    R_vec = {}
    for j in sets.Pa2 | sets.Pa2c:
        pj, qj, tj = spec.p_vec[j], spec.q_vec[j], spec.theta_vec[j]
        R_vec[j] = 1.0 / (1.0 - qj / pj - (tj - m * qj / pj) * (1.0 / p - 1.0 / (N * pj)))

    gamma_terms = [1.0 / spec.s_exp - 1.0 / base.p_star]
    gamma_terms += [1.0 - spec.theta_vec[j] / m - spec.q_vec[j] / spec.p_vec[j] for j in sets.Na]
    gamma_terms += [1.0 - spec.theta_vec[j] / p - spec.q_vec[j] / spec.p_vec[j] for j in sets.Nac]
    gamma0 = min(gamma_terms)

    gamma_abar_terms = [gamma0]
    gamma_abar_terms += [1.0 - spec.q_vec[j] / spec.p_vec[j] for j in sets.Phat1]
    for j in sets.Pa2 | sets.Pa2c:
        mj = absorption_margin(spec, base, j)
        gamma_abar_terms.append(spec.q_vec[j] * (m - mj) / (spec.p_vec[j] * p))
    gamma_abar_terms += [1.0 - spec.theta_vec[j] / m for j in sets.Pa3]
    gamma_abar = min(gamma_abar_terms)

    if base.abar == 0.0:
        theta_low = min(spec.theta_vec)
        theta_high = max(spec.theta_vec)
    else:
        shifted = [spec.theta_vec[j] - m * spec.q_vec[j] / spec.p_vec[j] for j in range(N)]
        theta_low = min(shifted)
        theta_high = max(shifted)

    r_mode = RMode.LM if base.abar == 0.0 and spec.case_id is Case.CASE1 else RMode.LINFTY

    return ExponentReport(
        p_mean=p, p_star=base.p_star, p_conj=base.p_conj,
        p_conj_vec=base.p_conj_vec, abar=base.abar, sets=sets,
        mj_vec=tuple(mj_vec), xi_vec=xi_vec, r_vec=r_vec, R_vec=R_vec,
        gamma0=gamma0, gamma_abar=gamma_abar,
        theta_abar_low=theta_low, theta_abar_high=theta_high,
        condition_m_holds=condition.holds, binding=condition.binding,
        r_mode=r_mode, h_exp=default_h_exp(spec, base),
        boundary_warnings=sets.boundary_warnings + condition.boundary_warnings,
    )


def build_report(spec: ProblemSpec) -> ExponentReport:
    """Validate, classify and derive in one call."""
    spec.validate()
    base = compute_base_exponents(spec)
    sets = classify_indices(spec, base)
    return derived_exponents(spec, base, sets)


def bootstrap_sequence(m: float, gamma: float, cap: int) -> list[float]:
    """Integrability bootstrap m_{k+1} = 2 m_k / (2 - gamma), cap terms starting at m.

    The dependence of the effective decay exponent on the improved
    integrability is not modelled here; the recurrence is iterated with a
    fixed gamma (see the report-level note emitted by the harness).
    """
    if not 0.0 < gamma < 1.0:
        raise SpecError(f"invalid gamma: {gamma} must lie in (0, 1)")
    if not m > 1.0:
        raise SpecError(f"m={m} must be > 1")
    if cap < 1:
        raise SpecError(f"cap={cap} must be >= 1")
    out = [m]
    for _ in range(cap - 1):
        out.append(2.0 * out[-1] / (2.0 - gamma))
    return out
