"""Exception types shared across the package."""


class QhomError(Exception):
    """Base class for all errors raised by this package."""


class NotFound(QhomError):
    """Unknown problem name."""


class DimensionError(QhomError):
    """Operands have incompatible system dimensions."""


class OutOfDomain(QhomError):
    """A state left the ball ||u|| <= radius on which (m, M) are declared."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoConvergence(QhomError):
    """An iteration hit its cap before reaching tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularJacobian(QhomError):
    """The flux derivative in u' is singular; contradicts strong monotonicity."""


class SingularCoefficient(QhomError):
    """A coefficient matrix is singular at a quadrature node."""


class UnresolvedOscillation(QhomError):
    """Grid too coarse for the fast variable: N < nodes_per_period / eps."""


class InvalidSample(QhomError):
    """Sample data violates the preconditions of a fit."""
