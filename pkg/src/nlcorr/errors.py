"""Semantic exception hierarchy shared across the package."""


class NLCorrError(Exception):
    """Base class for all domain errors raised by this package."""


class ValidationError(NLCorrError, ValueError):
    """Input violates a documented contract (shape, symmetry, domain, ...)."""


class DimensionMismatchError(ValidationError):
    """Operands have incompatible dimensions."""


class DegenerateInputError(ValidationError):
    """A variable, law, or function is degenerate (constant, zero variance)."""


class BudgetExceededError(NLCorrError):
    """An exact enumeration would exceed the configured atom budget."""


class CoefficientOverflowError(NLCorrError):
    """Expansion coefficients are non-finite; the function grows too fast at the nodes."""
