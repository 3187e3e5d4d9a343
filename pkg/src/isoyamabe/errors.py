"""Exception taxonomy.

Two families so the CLI can map failures to exit codes: configuration and
precondition problems (exit 2) versus genuine numerical failures (exit 3).
"""


class ConfigurationError(ValueError):
    """Bad input data, unmet precondition, or unsupported configuration."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to meet its contract."""


class DivergentArclength(ConfigurationError):
    """The arclength integral of 1/sqrt(b) does not converge: b vanishes
    faster than a simple zero at an endpoint (non-transnormal data)."""


class NonPositiveMass(ConfigurationError):
    """The level-volume density evaluated non-positive at a grid node."""


class SingularShift(NumericalError):
    """Shifted solve hit a (near-)singular matrix: the shift is an eigenvalue."""


class EigenFailure(NumericalError):
    """Eigensolver could not meet the residual contract."""


class ZeroWeight(ConfigurationError):
    """Generalized eigenproblem weight is identically zero."""


class ZeroFunction(ConfigurationError):
    """Functional evaluated on the zero function."""


class NotPositiveOperator(ConfigurationError):
    """The restricted operator has a nonpositive first eigenvalue."""


class ExponentOutOfRange(ConfigurationError):
    """Requested nonlinearity exponent violates the solvability gate."""


class NoConvergence(NumericalError):
    """Iteration cap reached or descent property violated.

    Carries the last iterate for diagnosis when available.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class DegenerateSecondEigenvalue(NumericalError):
    """The second and third weighted eigenvalues form a numerical cluster."""


class UnsupportedDimension(ConfigurationError):
    """Multiplicity-count formulas are only stated for even dimensions >= 4."""
