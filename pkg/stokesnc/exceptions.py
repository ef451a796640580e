"""
Exceptions raised by stokesnc.

Invalid inputs derive from ``ValueError``; failures of the numerics themselves
derive from :class:`NumericalError`.
"""


class ConfigurationError(ValueError):
    """Invalid physical, truncation or experiment parameters."""


class ConstraintViolation(ValueError):
    """Initial data violating the zero x-mean, divergence or wall
    constraints."""


class ConjugacyViolation(ValueError):
    """Signals of modes m and -m that are not complex conjugates, so the
    assembled boundary control would not be real."""


class NumericalError(RuntimeError):
    """Base class of numerical failures."""


class BracketingFailure(NumericalError):
    """A root scan found a window with the wrong number of sign changes."""


class NonConvergence(NumericalError):
    """Root refinement did not reach the requested tolerance."""


class DegenerateCoefficients(NumericalError):
    """All eigenfunction coefficients vanish, i.e. the root is spurious."""


class StepTooLarge(NumericalError):
    """A time step with |lambda| h beyond the exponential range."""


class IllConditioned(NumericalError):
    """An unregularized moment problem whose Gram matrix is numerically
    singular."""


class NumericalBreakdown(NumericalError):
    """An observability quadratic form with underflowed entries."""
