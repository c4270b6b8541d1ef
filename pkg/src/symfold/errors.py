"""Exception types raised by the estimators and I/O layer."""


class SymfoldError(Exception):
    """Base class for all package errors."""


class NonFinite(SymfoldError, ValueError):
    pass


class SingularCovariance(SymfoldError, ValueError):
    """Raised when a covariance matrix is (numerically) singular."""


class NonConvergence(SymfoldError, RuntimeError):
    pass


class DegenerateProjection(SymfoldError, ValueError):
    """A projected predictor has zero sample variance."""


class SliceTooSmall(SymfoldError, ValueError):
    pass


class LeverageOne(SymfoldError, ValueError):
    pass


class ZeroSlope(SymfoldError, ValueError):
    pass


class ParseError(SymfoldError, ValueError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class EmptyData(SymfoldError, ValueError):
    pass


class DegenerateScale(RuntimeWarning):
    """Warning: robust residual scale is zero, the fit is returned as is."""
