"""Exception types shared across the package."""

from __future__ import annotations


class DataError(ValueError):
    """Raised when input data are malformed or incomplete."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its budget far from a solution.

    Carries the last residual so callers can decide whether to retry with a
    larger budget or report the failure.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = float(residual)
