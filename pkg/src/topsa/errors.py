"""Exception hierarchy shared by every topsa module."""


class TSAError(Exception):
    """Base class for all toolkit errors."""


class NotPrime(TSAError, ValueError):
    pass


class DeltaIsSquare(TSAError, ValueError):
    """The requested extension modulus is a square, so x^2 - delta is reducible."""


class FieldMismatch(TSAError, ValueError):
    pass


class DivisionByZero(TSAError, ZeroDivisionError):
    pass


class NoSuchRoot(TSAError, ValueError):
    pass


class TooSmall(TSAError, ValueError):
    pass


class BadVertex(TSAError, IndexError):
    pass


class BadIndex(TSAError, IndexError):
    pass


class ShapeMismatch(TSAError, ValueError):
    pass


class InvalidTopology(TSAError, ValueError):
    pass


class NotRegular(TSAError, ValueError):
    pass


class ConstructionFailed(TSAError, RuntimeError):
    """A named builder produced a scheme that does not verify."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class KernelTooSmall(TSAError, ValueError):
    def __init__(self, message, kernel_dim=None, d=None):
        super().__init__(message)
        self.kernel_dim = kernel_dim
        self.d = d


class RankConditionFailed(TSAError, ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BudgetExceeded(TSAError, RuntimeError):
    pass


class NonUniformSupport(TSAError, RuntimeError):
    """Key outcomes were not uniform over their support (linearity is broken)."""


class FormatError(TSAError, ValueError):
    """A JSON document does not match the expected interchange format."""
