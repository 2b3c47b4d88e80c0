"""Exception hierarchy shared by all modules."""


class SpecError(ValueError):
    """A problem specification violates one of its structural constraints."""


class SupercriticalError(SpecError):
    """Harmonic-mean exponent is >= the dimension, so the Sobolev exponent is undefined."""


class ConditionMError(SpecError):
    """The absorption exponent fails the strict existence condition."""


class GridMismatchError(ValueError):
    """Two grid functions do not live on the same grid."""


class DomainError(ValueError):
    """A pointwise evaluator was called outside its domain of definition."""


class SolverError(RuntimeError):
    """Base class for failures of the discrete solver."""


class DivergedError(SolverError):
    """Residual grew over several consecutive outer iterations."""


class NewtonStallError(SolverError):
    """Inner line search could not produce a descent step."""


class NanError(SolverError):
    """An overflow produced a non-finite value; carries the offending node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConfigError(ValueError):
    """Experiment configuration failed validation; message carries the field path."""
