"""Exception hierarchy.

Errors split into two families so the command line can map them onto
distinct exit codes: problems with the input data (``DataError``) and
numerical failures (``NumericalError``).
"""


class ElciError(Exception):
    """Base class for all package errors."""


class DataError(ElciError, ValueError):
    """The input data or configuration is invalid."""


class ValidationError(DataError):
    """An observation or parameter violates its contract."""


class DegenerateSample(DataError):
    """The sample is too small or carries no events."""


class NumericalError(ElciError, ArithmeticError):
    """A computation could not be carried out to the required accuracy."""


class NoSignChange(NumericalError):
    """The estimating equation has no root in the parameter domain."""


class ZeroDenominator(NoSignChange):
    """A ratio-type estimator has a vanishing denominator.

    The estimating equation is then identically zero and has no unique root.
    """


class DivisionByZero(NumericalError):
    """A risk-set quantity vanished where it is used as a divisor.

    Only reachable with tied times. ``index`` is the offending position in
    the sorted sample.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InfeasibleConstraint(NumericalError):
    """The influence values do not straddle zero, so no EL weights exist."""


class ZeroVariance(NumericalError):
    """A variance estimate needed for scaling is zero."""


class QuadratureFailure(NumericalError):
    """An integral could not be evaluated to the requested tolerance."""


class DivergentIntegral(QuadratureFailure):
    """An integral required to be finite diverges for the given model."""
