"""Exception hierarchy.

Everything raised on purpose by this package derives from :class:`ResfluorError`.
:class:`DomainError` marks failures that come from the physics (an unphysical
state, a blind measurement point, a truncation that is too small) rather than
from malformed input; the CLI maps the two families to different exit codes.
"""


class ResfluorError(Exception):
    """Base class for all package errors."""


class InvalidInput(ResfluorError, ValueError):
    """An argument is outside its allowed range."""


class ConfigError(InvalidInput):
    """A run configuration is malformed."""


class DomainError(ResfluorError):
    """The request is well-formed but physically meaningless or degenerate."""


class NonPhysical(DomainError):
    """A covariance matrix violates the uncertainty principle."""


class NotUnitary(DomainError):
    """A mode transformation is not unitary."""


class ZeroMeanPhotonNumber(DomainError):
    """g2 is undefined because the mean occupation vanishes."""


class UnsupportedDrive(DomainError):
    """The requested closed form does not exist for this drive state."""


class ImproperP(UnsupportedDrive):
    """The drive has no non-negative P-function to sample from."""


class DegenerateCoupling(DomainError):
    """The coupling prefactor is too small to invert (theta near k*pi)."""


class DimensionGuard(DomainError):
    """Fock truncation dimension exceeds the memory guard."""


class TruncationTail(DomainError):
    """Too much population sits in the top Fock level."""


class InsufficientShots(DomainError):
    """Fewer than two shots are available for a covariance estimate."""
