"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes do not conform."""


class NotUnitaryError(ValueError):
    """A matrix expected to be unitary is not, within tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularMatrixError(ValueError):
    """Rank-deficient input where a unique factor is required."""


class ConvergenceError(RuntimeError):
    """An iterative factorization ran out of its iteration budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericError(ArithmeticError):
    """Non-finite values appeared during a computation."""
