"""Exception types raised by trigzeros.

Every error subclasses ``ValueError`` so callers that only expect bad-argument
failures keep working.
"""


class TrigZerosError(ValueError):
    """Base class for all trigzeros errors."""


class UnsupportedOrderError(TrigZerosError):
    """Moment or cumulant order outside the supported range."""


class DegenerateLawError(TrigZerosError):
    """Law with zero variance, or too few atoms for the requested bound."""


class InsufficientTruncationError(TrigZerosError):
    """Truncated support leaves more than 1e-12 of probability mass out."""


class CompositePeriodError(TrigZerosError):
    """Prime-angle constructions need a prime period."""


class ContractError(TrigZerosError):
    """A caller broke a documented precondition, e.g. passed a non-standardized law."""


class FlatEnvelopeError(TrigZerosError):
    """Exponent fit requested on an envelope with no usable variation."""


class InsufficientDataError(TrigZerosError):
    """Too few usable points for a regression."""


class ConfigError(TrigZerosError):
    """Invalid experiment configuration."""
