"""Exception types shared by every module.

The CLI maps :class:`ValidationError` subclasses to exit code 2 and
:class:`BudgetError` subclasses to exit code 3.
"""


class ValidationError(ValueError):
    """Invalid input: bad parameter value, malformed word, wrong grid."""


class DomainError(ValidationError):
    """Argument outside the admissible domain of an operation."""


class ScaleError(DomainError):
    """A census scale ``sigma`` outside the range where its census bound applies."""


class InsufficientRangeError(ValidationError):
    """Too few usable points (or too few decades) for a log-log fit."""


class FitRefusedError(ValidationError):
    """Discretisation error is too large relative to the fitted values."""


class ResolutionError(ValidationError):
    """A grid or bin width cannot resolve the requested frequency."""


class BudgetError(RuntimeError):
    """The request exceeds the computational budget of an operation."""


class DepthOverflowError(BudgetError):
    """Required symbolic depth exceeds the supported maximum."""


class PrecisionWarning(UserWarning):
    """Forward iteration deep enough that round-off may exceed the truncation error."""
