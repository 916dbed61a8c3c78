"""Exception types shared across the package.

The CLI maps each of these to a distinct exit code.
"""


class FrogModelError(Exception):
    """Base class for all package errors."""


class ConfigError(FrogModelError, ValueError):
    """Malformed or invalid model configuration."""


class NumericalError(FrogModelError, ArithmeticError):
    """A numerical routine produced a non-finite value or failed to converge."""


class QuadratureError(NumericalError):
    """Adaptive quadrature stalled before reaching the requested tolerance."""


class ResourceBudgetError(FrogModelError, RuntimeError):
    """A simulation trial exceeded its frog budget."""

    def __init__(self, message, trial=None):
        super().__init__(message)
        self.trial = trial
