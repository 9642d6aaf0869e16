"""Exception types shared across the package."""

from __future__ import annotations


class QNGError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(QNGError, ValueError):
    """Invalid parameters or configuration (maps to CLI exit code 1)."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalError(QNGError, ArithmeticError):
    """A numerical routine failed or produced an inconsistent result."""


class UnphysicalStateError(NumericalError):
    """A covariance matrix violates the uncertainty principle."""


class NoClickSupport(NumericalError):
    """The heralding event has (numerically) zero probability."""


class TruncationError(NumericalError):
    """A Fock-space truncation was too small for the requested accuracy."""


class IntegrationError(NumericalError):
    """An ODE integrator failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        self.achieved = achieved
        super().__init__(message if achieved is None else f"{message} (achieved tol {achieved:.3g})")
