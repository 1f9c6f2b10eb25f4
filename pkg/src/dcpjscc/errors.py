"""Exception and warning types raised by the design solvers and oracles."""

from __future__ import annotations


class DCPError(Exception):
    """Base class for domain errors in this package."""


class PeBelowRange(DCPError, ValueError):
    """Target classification error is below ``Q(sqrt(SNR))``: infeasible."""


class PeAboveRange(UserWarning):
    """Target error exceeds the linear-encoder risk; the trivial design is returned."""


class NoRootInBracket(DCPError, RuntimeError):
    """The risk stationarity condition has no sign change on the search bracket."""


class TargetUnreachable(DCPError, ValueError):
    """No anomaly-detection design attains the requested risk.

    Attributes:
        achievable: ``(risk_min, risk_max)`` over the power-allocation range.
    """

    def __init__(self, message: str, achievable: tuple[float, float]):
        super().__init__(message)
        self.achievable = achievable


class QuadratureNotConverged(DCPError, RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget."""
