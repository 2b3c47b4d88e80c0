"""Numerical toolkit for anisotropic absorption problems with singular
gradient-dependent lower-order terms.

Modules: exponent calculus and admissibility (``exponents``), pointwise
nonlinearities and truncation tools (``nonlinearity``), discrete function
spaces (``grid``), the concrete bounded lower-order operator
(``operator_b``), the regularized solver (``solver``), configuration and
the command-line harness (``config``, ``cli``), self-verification
(``verify``) and seeded parameter sampling (``sampling``).
"""

from .errors import (ConditionMError, ConfigError, DivergedError, DomainError,
                     GridMismatchError, NanError, NewtonStallError, SolverError,
                     SpecError, SupercriticalError)
from .exponents import (BaseExponents, Case, ConditionReport, ExponentReport,
                        IndexSets, ProblemSpec, RMode, bootstrap_sequence,
                        build_report, check_condition_m, classify_indices,
                        compute_base_exponents, derived_exponents, harmonic_mean)
from .grid import (Grid, GridFunction, anisotropic_norm, level_measure,
                   node_gradients, norm_Ls, pairing_A, partial, sobolev_ratio)
from .nonlinearity import (PointState, RegularizationParams, eval_H, eval_phi,
                           eval_psi, eval_psi_n, excess, exp_weight,
                           exp_weight_deriv, exp_weight_gap, growth_rate,
                           truncate)
from .operator_b import (OperatorBSpec, check_P1, eval_B, make_psi_map,
                         truncate_datum)
from .solver import (SequenceReport, SolveReport, SolverOptions,
                     energy_identity_residual, run_sequence, solve_regularized,
                     stampacchia_profile)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
