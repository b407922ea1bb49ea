"""Exception hierarchy shared across the library."""


class OmstateError(Exception):
    """Base class for all library errors."""


class ValidationError(OmstateError):
    """Input data violates a structural invariant (bad matrix, bad weights, ...)."""


class DimensionMismatchError(ValidationError):
    """Operands live on spaces of different dimensions."""


class UnsupportedFamilyError(OmstateError):
    """The requested operation is not closed for this family combination."""


class IncompatibleError(OmstateError):
    """Two information sources cannot describe the same system (zero fusion mass)."""


class SizeCapError(OmstateError):
    """An exhaustive computation would exceed the configured size cap."""
