"""Shared exception types."""

__all__ = ["NumericalError", "ParityError"]


class NumericalError(RuntimeError):
    """A numerical routine could not meet its accuracy or convergence contract."""


class ParityError(ValueError):
    """A sphere function's sampled values contradict its declared antipodal parity."""
