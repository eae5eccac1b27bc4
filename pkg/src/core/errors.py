"""Exception hierarchy shared by every module."""

from __future__ import annotations

from typing import Optional

import numpy as np


class ProdIntError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(ProdIntError, ValueError):
    """Malformed call: unsorted partitions, interval mismatches, bad orders."""


class DomainError(ProdIntError, ValueError):
    """A matrix does not belong to the algebra or group it was declared in."""

    def __init__(self, message: str, matrix: Optional[np.ndarray] = None):
        if matrix is not None:
            message = f"{message}\n{np.array2string(np.asarray(matrix), precision=6)}"
        super().__init__(message)
        self.matrix = matrix


class ChartDomainError(DomainError):
    """Chart vector outside the certified chart ball."""


class SingularElementError(ProdIntError, ArithmeticError):
    """Inversion of a singular group value."""

    def __init__(self, message: str, t: Optional[float] = None):
        if t is not None:
            message = f"{message} (at t={t!r})"
        super().__init__(message)
        self.t = t


class QuadratureError(ProdIntError, RuntimeError):
    """Composite quadrature did not reach its tolerance."""

    def __init__(self, message: str, estimate=None, achieved: float = float("nan")):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.estimate = estimate
        self.achieved = achieved


class ConvergenceError(ProdIntError, RuntimeError):
    """Adaptive stepping gave up; the last iterate is kept for inspection."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class PreconditionError(ProdIntError, ValueError):
    """An operation was called without the certificate it depends on."""


class UnknownSeminormError(ProdIntError, KeyError):
    """Seminorm identifier not present in the family."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown seminorm"
