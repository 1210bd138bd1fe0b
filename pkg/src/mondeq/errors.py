"""Exception hierarchy shared by all modules."""


class MondeqError(Exception):
    """Base class for library errors."""


class DomainError(MondeqError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(MondeqError, ValueError):
    """Input data violates a structural invariant (negative density, mass mismatch, ...)."""


class ToleranceNotMetError(MondeqError, RuntimeError):
    """Adaptive quadrature gave up before reaching the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NoCompactSupportError(MondeqError, RuntimeError):
    """Shooting integration did not reach a zero of the density."""


class BracketError(MondeqError, ValueError):
    """Root bracket does not straddle the target."""

    def __init__(self, message, hints=None):
        super().__init__(message)
        self.hints = hints or {}


class SamplerError(MondeqError, RuntimeError):
    """Rejection sampling efficiency dropped below the allowed floor."""
