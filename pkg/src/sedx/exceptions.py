"""Exception hierarchy shared by every module of the package."""


class SedxError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SedxError, ValueError):
    """Inconsistent shapes, orders or hyperparameters."""


class WindowRangeError(ConfigurationError, IndexError):
    """A window anchor violates a history or horizon bound."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class ExogenousHorizonError(ConfigurationError):
    """Future exogenous values needed by a forecast are missing."""


class DivergenceError(SedxError, FloatingPointError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, batch, loss):
        super().__init__(f"divergence: non-finite loss {loss!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class RankDeficiencyError(SedxError, ValueError):
    """Least-squares design matrix has collinear columns."""

    def __init__(self, columns):
        super().__init__(f"rank-deficient design matrix; collinear columns: {', '.join(columns)}")
        self.columns = list(columns)


class InstabilityError(SedxError, ArithmeticError):
    """Simulated process blew up."""


class UndefinedMetricError(SedxError, ValueError):
    """Metric cannot be computed for the given values."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ParseError(SedxError, ValueError):
    """Malformed corpus file."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
