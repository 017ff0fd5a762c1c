"""Desk-scale simulation of separability tests, interactive proofs and reductions."""

from . import circuit, extend, linalg, multiparty, protocol, qstate, reduction
from .errors import (
    DegeneratePromiseError,
    DimensionLimitError,
    DimensionMismatchError,
    InvalidGapError,
    NotPSDError,
    QsepError,
    ValidationError,
)

__version__ = "0.1.0"
