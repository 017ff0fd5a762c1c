"""Exception hierarchy shared by every qsep module."""


class QsepError(Exception):
    """Base class for all errors raised by qsep."""


class ValidationError(QsepError, ValueError):
    """An input object violates a structural or numerical contract."""


class DimensionMismatchError(ValidationError):
    """Two operands have incompatible subsystem dimensions."""


class DimensionLimitError(QsepError):
    """A construction would exceed the configured Hilbert-space dimension cap."""


class NotPSDError(ValidationError):
    """A matrix has an eigenvalue below the PSD clamping tolerance."""


class InvalidGapError(ValidationError):
    """A bound formula received parameters with a non-positive gap."""


class DegeneratePromiseError(QsepError):
    """A reduction produced a promise pair with soundness below completeness."""
