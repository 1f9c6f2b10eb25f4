"""Distortion-classification-power trade-offs for analog JSCC over AWGN channels."""

from . import anomaly, binary_class, sim_oracle, special_fn
from .errors import (
    DCPError,
    NoRootInBracket,
    PeAboveRange,
    PeBelowRange,
    QuadratureNotConverged,
    TargetUnreachable,
)

__version__ = "0.1.0"

__all__ = [
    "anomaly",
    "binary_class",
    "sim_oracle",
    "special_fn",
    "DCPError",
    "NoRootInBracket",
    "PeAboveRange",
    "PeBelowRange",
    "QuadratureNotConverged",
    "TargetUnreachable",
]
