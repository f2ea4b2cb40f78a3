"""Exception and warning types shared across the package."""


class InvalidInputError(ValueError):
    """Arguments violate a documented precondition."""


class DomainError(ValueError):
    """Evaluation point lies outside the function's domain (poles, chamber walls)."""


class CapacityError(ValueError):
    """Request exceeds a fixed internal capacity such as the partition degree cap."""


class NumericError(ArithmeticError):
    """An iterative or stochastic computation failed to produce a usable result."""


class StuckPathError(NumericError):
    """Too many simulated paths kept failing at the maximum halving depth."""

    def __init__(self, message, path_indices=()):
        super().__init__(message)
        self.path_indices = tuple(path_indices)


class TruncationWarning(UserWarning):
    """A truncated series did not meet its relative term tolerance."""
