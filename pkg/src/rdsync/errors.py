"""Typed errors shared across the package."""

from __future__ import annotations


class RdsyncError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RdsyncError, ValueError):
    """An input violates a documented invariant.

    The message names the violated invariant so callers can report it.
    """


class ConvergenceError(RdsyncError, RuntimeError):
    """An iterative method failed to converge within its iteration budget.

    Raised by power iteration on periodic chains, and by chains whose
    limit depends on the start in a way the caller cannot accept.
    """


class InfiniteExpectedTimeError(RdsyncError, ArithmeticError):
    """An expected hitting time is infinite.

    Raised when (I - Mbar) is numerically singular, i.e. absorption never
    happens from some starting state.
    """


class InsufficientDataError(RdsyncError, ValueError):
    """A statistical procedure received fewer samples than it requires."""


class ConfigError(RdsyncError, ValueError):
    """An experiment configuration is malformed.

    The message carries the offending field path.
    """
