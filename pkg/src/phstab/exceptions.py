"""Exception types raised by phstab."""


class DimensionError(ValueError):
    """Array shapes are incompatible with the requested operation."""


class InvalidSystemError(ValueError):
    """A system description violates a standing assumption.

    ``violations`` holds the :class:`~phstab.system.Violation` records that
    caused the refusal.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
