"""Exception and warning classes.

The CLI maps the three families onto exit codes: :class:`ConfigError` -> 2,
:class:`DataError` -> 3, :class:`NumericalError` -> 4.
"""


class LcvtError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LcvtError, ValueError):
    """Invalid configuration, scenario file or option value."""

    def __init__(self, message, key=None):
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


class DataError(LcvtError, ValueError):
    """The input data cannot be used as given."""


class InputFileNotFound(DataError, FileNotFoundError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.row = row
        self.column = column


class NonFiniteInput(DataError):
    pass


class DegenerateDesign(DataError):
    """Every covariate column has zero variance."""


class FoldTooSmall(DataError):
    pass


class InsufficientData(DataError):
    pass


class NotSymmetric(LcvtError, ValueError):
    pass


class NumericalError(LcvtError, ArithmeticError):
    """A computation could not produce a meaningful result."""


class NotPositiveDefinite(NumericalError):
    pass


class SingularDesign(NumericalError):
    """Least squares is not identified (p >= n or ill-conditioned Gram matrix)."""


class AllZeroResiduals(NumericalError):
    """Residual variance is zero, so the coefficient of variation is undefined."""


class NoPositiveRoot(NumericalError):
    pass


class CampaignAborted(NumericalError):
    pass


class MaxItersExceeded(RuntimeWarning):
    """Coordinate descent hit ``max_iters``; the fit is returned unconverged."""
