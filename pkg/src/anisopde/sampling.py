"""Seeded random generation of admissible problem parameters.

Used by the verification harness and the property tests; everything is
driven by ``numpy.random.Generator`` so a seed pins the whole stream.
"""

from __future__ import annotations

import numpy as np

from .errors import ConditionMError, SpecError
from .exponents import (ProblemSpec, check_condition_m, classify_indices,
                        compute_base_exponents, harmonic_mean)


def random_spec(rng: np.random.Generator, require_condition_m: bool = False,
                dims=(2, 3, 4)) -> ProblemSpec:
    """Draw one admissible parameter tuple (subcritical, all field invariants).

    Rejection sampling: p is redrawn until its harmonic mean stays below N,
    and optionally until the strict existence condition holds.  The draw
    ranges are wide enough to populate every index-partition cell.
    """
    for _ in range(10_000):
        N = int(rng.choice(dims))
        p_vec = tuple(float(x) for x in rng.uniform(1.1, 4.0, size=N))
        if harmonic_mean(p_vec) >= N:
            continue
        q_vec = []
        for pj in p_vec:
            # q = 0 with positive probability so Na/Nac stay reachable
            q_vec.append(0.0 if rng.random() < 0.3
                         else float(rng.uniform(0.0, pj - 1e-3)))
        q_vec = tuple(q_vec)
        theta_vec = tuple(float(x) for x in rng.uniform(0.1, 3.0, size=N))
        a_vec = tuple(0.0 if rng.random() < 0.3 else float(rng.uniform(0.0, 2.0))
                      for _ in range(N))
        m = float(rng.uniform(1.05, 8.0))
        spec = ProblemSpec(N=N, p_vec=p_vec, q_vec=q_vec, theta_vec=theta_vec,
                           a_vec=a_vec, m=m, b_exp=_valid_b(rng, p_vec, 0.0),
                           s_exp=_valid_s(rng, N, p_vec))
        try:
            spec.validate()
            base = compute_base_exponents(spec)
        except SpecError:
            continue
        if require_condition_m:
            sets = classify_indices(spec, base)
            if not check_condition_m(spec, base, sets).holds:
                continue
        return spec
    raise ConditionMError("rejection sampling exhausted its draw budget")


def _valid_b(rng, p_vec, a0):
    pm = harmonic_mean(p_vec)
    hi = (p_vec[0] - 1.0) if a0 > 0.0 else p_vec[0] * (pm - 1.0) / pm
    return float(rng.uniform(0.0, hi) * 0.999 + 1e-6)


def _valid_s(rng, N, p_vec):
    pm = harmonic_mean(p_vec)
    p_star = N * pm / (N - pm)
    return float(min(rng.uniform(1.0, p_star), p_star * (1.0 - 1e-9)))


def random_point_pairs(rng: np.random.Generator, count: int, lo=0.01, hi=10.0):
    """(t1, t2) samples on [lo, hi]^2 for the regularization-limit checks."""
    return rng.uniform(lo, hi, size=(count, 2))
