"""Exception types raised by the solver, problem and theory modules."""


class AndersonNareError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(AndersonNareError, ValueError):
    pass


class CapacityExceeded(AndersonNareError, RuntimeError):
    pass


class EmptyFactorization(AndersonNareError, RuntimeError):
    pass


class SingularTriangular(AndersonNareError, ArithmeticError):
    pass


class RankDeficientColumn(AndersonNareError, ArithmeticError):
    """New column is numerically in the span of the current basis.

    The factorization is left unchanged when this is raised.
    """

    def __init__(self, diag, scale):
        super().__init__(f"new diagonal {diag:.3e} below drop tolerance (scale {scale:.3e})")
        self.diag = diag
        self.scale = scale


class NonFiniteIterate(AndersonNareError, FloatingPointError):
    """An iterate picked up NaN/Inf. ``report`` holds the partial run."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DegenerateDifference(AndersonNareError, ZeroDivisionError):
    pass


class ZeroResidual(AndersonNareError, ZeroDivisionError):
    pass


class InvalidSize(AndersonNareError, ValueError):
    pass


class ParamOutOfRange(AndersonNareError, ValueError):
    pass


class DivideByZero(AndersonNareError, ZeroDivisionError):
    """Nonpositive pivot in a block Jacobi / Gauss-Seidel update."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ZeroNorm(AndersonNareError, ZeroDivisionError):
    pass


class HypothesisViolated(AndersonNareError, ValueError):
    pass


class OutsideBall(AndersonNareError, ValueError):
    pass


class DegenerateAlpha(AndersonNareError, ZeroDivisionError):
    pass


class EmptyHistory(AndersonNareError, ValueError):
    pass


class DegeneratePair(AndersonNareError, ValueError):
    pass
