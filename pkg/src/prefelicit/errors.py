"""Semantic exceptions and warnings shared across the package."""


class PrefElicitError(Exception):
    """Base class for all package errors."""


class DomainError(PrefElicitError, ValueError):
    """Input lies outside the mathematical domain of an operation."""


class DimensionMismatch(PrefElicitError, ValueError):
    """Vector or matrix dimensions are incompatible."""


class InsufficientSamples(PrefElicitError, ValueError):
    """Too few draws to form the requested estimate."""


class SingularMatrix(PrefElicitError, RuntimeError):
    """A matrix inversion failed despite jitter regularization."""


class InvalidState(PrefElicitError, RuntimeError):
    """Operation called on a session in the wrong lifecycle state."""


class ConvergenceWarning(UserWarning):
    """Sampler health indicator (e.g. acceptance rate out of band); non-fatal."""
