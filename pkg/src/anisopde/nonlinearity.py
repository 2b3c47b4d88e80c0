"""Pointwise nonlinearities and the truncation/test-function toolkit.

All evaluators are pure functions of scalars or numpy arrays and can be
called concurrently.  The scalar entry points mirror the continuous
definitions; the ``*_field`` helpers vectorize them over grid nodes for the
solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SpecError
from .exponents import Case, ProblemSpec

#: exponent clamp before calling exp(), keeps the weight finite in float64
EXP_CLAMP = 700.0


@dataclass(frozen=True)
class RegularizationParams:
    """Regularization index n and the steepness of the bounded approximation."""

    n: int
    h_exp: float

    def __post_init__(self):
        if self.n < 1:
            raise SpecError(f"n={self.n} must be >= 1")
        if self.h_exp <= 1.0:
            raise SpecError(f"h_exp={self.h_exp} must be > 1")


@dataclass(frozen=True)
class PointState:
    """Raw point data: value and per-direction derivatives."""

    u_val: float
    grad: tuple[float, ...]


def _signed_power(u, m):
    """|u|^(m-2) u, continuously extended by 0 at u = 0 (needs m > 1)."""
    return np.sign(u) * np.abs(u) ** (m - 1.0)


def eval_phi(state: PointState, spec: ProblemSpec) -> float:
    """Absorption term (sum_j a_j |d_j u|^{p_j} + 1) |u|^{m-2} u."""
    coeff = 1.0 + sum(aj * abs(g) ** pj
                      for aj, g, pj in zip(spec.a_vec, state.grad, spec.p_vec))
    return coeff * float(_signed_power(state.u_val, spec.m))


def phi_field(u, grads, spec: ProblemSpec):
    """Vectorized absorption term; grads has one trailing axis per direction."""
    coeff = np.ones_like(u)
    for j in range(spec.N):
        if spec.a_vec[j] != 0.0:
            coeff = coeff + spec.a_vec[j] * np.abs(grads[..., j]) ** spec.p_vec[j]
    return coeff * _signed_power(u, spec.m)


def eval_psi(state: PointState, spec: ProblemSpec) -> float:
    """Singular term (1/u) sum_j |u|^{theta_j} |d_j u|^{q_j}; 0 on {u = 0}.

    The zero convention is consistent with the gradient vanishing a.e. on the
    zero set of a Sobolev function.
    """
    u = state.u_val
    if u == 0.0:
        return 0.0
    total = 0.0
    for j in range(spec.N):
        total += abs(u) ** spec.theta_vec[j] * abs(state.grad[j]) ** spec.q_vec[j]
    return total / u


def psi_times_u_field(u, grads, spec: ProblemSpec):
    """Vectorized Psi(u)*u = sum_j |u|^{theta_j} |d_j u|^{q_j} on {u != 0}, else 0."""
    out = np.zeros_like(u)
    nz = u != 0.0
    for j in range(spec.N):
        out = out + np.where(nz, np.abs(u) ** spec.theta_vec[j]
                             * np.abs(grads[..., j]) ** spec.q_vec[j], 0.0)
    return out


def _H_base(t1, t2, theta, q, n, h):
    # t1 > 0 (arrays allowed); the bracket equals (1 + L^{1/h}/n)^{-h} with
    # L = t1^{theta-1} |t2|^q
    L = t1 ** (theta - 1.0) * np.abs(t2) ** q
    return L * (1.0 + L ** (1.0 / h) / n) ** (-h)


def eval_H(j: int, t1: float, t2: float, params: RegularizationParams,
           spec: ProblemSpec) -> float:
    """Bounded regularization of t1^{theta_j-1} |t2|^{q_j}, extended past t1 <= 0.

    Case 1 extends oddly in t1 for every direction (0 at t1 = 0); Case 2
    extends evenly for theta_j >= 1 and refuses t1 <= 0 otherwise, where the
    caller must shift the first argument away from zero.
    """
    theta, q = spec.theta_vec[j], spec.q_vec[j]
    h = params.h_exp
    if t1 > 0.0:
        return float(_H_base(t1, t2, theta, q, params.n, h))
    if spec.case_id is Case.CASE1:
        if t1 == 0.0:
            return 0.0
        return -float(_H_base(-t1, t2, theta, q, params.n, h))
    if theta >= 1.0:  # Case 2, j in J1: even extension
        if t1 == 0.0:
            # limit from t1 > 0; 0^0 := 1 covers theta_j = 1
            L = (0.0 ** (theta - 1.0) if theta > 1.0 else 1.0) * abs(t2) ** q
            return float(L * (1.0 + L ** (1.0 / h) / params.n) ** (-h))
        return float(_H_base(-t1, t2, theta, q, params.n, h))
    raise DomainError(
        f"domain: H_(j={j}) with theta_j={theta} < 1 in Case 2 requires t1 > 0 "
        "(pass |u| + 1/n)")


def eval_psi_n(state: PointState, params: RegularizationParams,
               spec: ProblemSpec) -> float:
    """Bounded approximation of the singular term at one point."""
    total = 0.0
    for j in range(spec.N):
        if spec.theta_vec[j] >= 1.0:
            total += eval_H(j, state.u_val, state.grad[j], params, spec)
        else:
            total += eval_H(j, abs(state.u_val) + 1.0 / params.n, state.grad[j],
                            params, spec)
    return total


def psi_n_field(u, grads, params: RegularizationParams, spec: ProblemSpec):
    """Vectorized bounded approximation over grid nodes."""
    out = np.zeros_like(u)
    case1 = spec.case_id is Case.CASE1
    for j in range(spec.N):
        theta, q = spec.theta_vec[j], spec.q_vec[j]
        g = grads[..., j]
        if theta >= 1.0:
            t1 = np.abs(u)
            with np.errstate(divide="ignore", invalid="ignore"):
                base = _H_base(np.where(t1 > 0.0, t1, 1.0), g, theta, q, params.n,
                               params.h_exp)
            if theta > 1.0:
                at_zero = 0.0
            else:
                L0 = np.abs(g) ** q
                at_zero = L0 * (1.0 + L0 ** (1.0 / params.h_exp) / params.n) ** (-params.h_exp)
            base = np.where(t1 > 0.0, base, 0.0 if case1 else at_zero)
            out = out + (np.sign(u) * base if case1 else base)
        else:
            out = out + _H_base(np.abs(u) + 1.0 / params.n, g, theta, q, params.n,
                                params.h_exp)
    return out


# ---------------------------------------------------------------------------
# truncation / level-set toolkit

def truncate(s, k):
    """Clamp to [-k, k]."""
    if k <= 0.0:
        raise SpecError(f"invalid level: k={k} must be > 0")
    return np.clip(s, -k, k)


def excess(s, k):
    """Part of s beyond the clamp: s - truncate(s, k)."""
    if k <= 0.0:
        raise SpecError(f"invalid level: k={k} must be > 0")
    return s - np.clip(s, -k, k)


def bump(s, sigma):
    """Piecewise-linear plateau: 1 on [0, sigma], linear to 0 on [sigma, 2 sigma]."""
    if sigma <= 0.0:
        raise SpecError(f"invalid level: sigma={sigma} must be > 0")
    return np.clip(2.0 - np.asarray(s, dtype=float) / sigma, 0.0, 1.0)


def growth_rate(k: float, m: float, abar: float) -> float:
    """The quadratic-exponential rate lambda = (k^{m-1} abar / 2)^2."""
    if k <= 0.0:
        raise SpecError(f"invalid level: k={k} must be > 0")
    return (k ** (m - 1.0) * abar / 2.0) ** 2


def exp_weight(s, k: float, m: float, abar: float):
    """Test-function profile s * exp(lambda s^2) with the rate of growth_rate.

    The exponent is clamped at EXP_CLAMP before exponentiation; use
    ``exp_weight_saturated`` to detect when the clamp fired.
    """
    lam = growth_rate(k, m, abar)
    s = np.asarray(s, dtype=float)
    with np.errstate(over="ignore"):
        out = s * np.exp(np.minimum(lam * s * s, EXP_CLAMP))
    return np.clip(out, -np.finfo(float).max, np.finfo(float).max)


def exp_weight_deriv(s, k: float, m: float, abar: float):
    """Derivative (1 + 2 lambda s^2) exp(lambda s^2), clamped like exp_weight."""
    lam = growth_rate(k, m, abar)
    s = np.asarray(s, dtype=float)
    with np.errstate(over="ignore"):
        out = (1.0 + 2.0 * lam * s * s) * np.exp(np.minimum(lam * s * s, EXP_CLAMP))
    return np.minimum(out, np.finfo(float).max)


def exp_weight_saturated(s, k: float, m: float, abar: float) -> bool:
    lam = growth_rate(k, m, abar)
    s = np.asarray(s, dtype=float)
    return bool(np.any(lam * s * s > EXP_CLAMP))


def exp_weight_gap(s, k: float, m: float, abar: float):
    """Fused phi' - abar k^{m-1} phi, algebraically exp(lambda s^2)(2 lambda s^2 - c s + 1).

    The fused form avoids inf - inf when both factors saturate; the quadratic
    is bounded below by 1/2 for the rate chosen by growth_rate.
    """
    lam = growth_rate(k, m, abar)
    c = abar * k ** (m - 1.0)
    s = np.asarray(s, dtype=float)
    with np.errstate(over="ignore"):
        # saturated products overflow to +inf, which is harmless for the
        # lower-bound check
        return np.exp(np.minimum(lam * s * s, EXP_CLAMP)) * (2.0 * lam * s * s - c * s + 1.0)
