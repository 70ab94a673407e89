"""Exception types raised across the package."""


class ExpRbmError(Exception):
    """Base class for all package errors."""


class DomainError(ExpRbmError, ValueError):
    """An argument lies outside the domain of a unit's functions."""


class SaturationError(ExpRbmError, OverflowError):
    """A computation overflowed instead of producing a finite value."""


class DimensionMismatch(ExpRbmError, ValueError):
    pass


class UnsupportedExactSampler(ExpRbmError):
    """The unit has no closed-form sampler; use the Gaussian approximation."""


class QuadratureFailure(ExpRbmError, ArithmeticError):
    """The conditional's mass did not decay inside the integration range."""


class DivergenceDetected(ExpRbmError, ArithmeticError):
    """Training produced non-finite or exploding parameters."""


class DataFormatError(ExpRbmError, ValueError):
    """A data or model file could not be parsed."""


class MalformedMagic(DataFormatError):
    pass


class TruncatedPayload(DataFormatError):
    pass


class UnsupportedType(DataFormatError):
    pass


class ChecksumError(DataFormatError):
    pass


class VersionError(DataFormatError):
    pass
