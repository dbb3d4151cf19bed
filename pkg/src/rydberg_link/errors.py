"""Exception hierarchy.

CLI exit codes map onto these: :class:`ConfigError` -> 2,
:class:`NumericalError` -> 3, :class:`ValidationFailure` -> 4.
"""


class RydbergLinkError(Exception):
    """Base class for all package errors."""


class ConfigError(RydbergLinkError):
    """Malformed or invalid configuration. Carries the offending line when known."""

    def __init__(self, message, lineno=None, key=None):
        self.lineno = lineno
        self.key = key
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DomainError(RydbergLinkError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(DomainError):
    """Lookup outside the sampled grid (no extrapolation)."""


class NumericalError(RydbergLinkError):
    """A numerical procedure failed or produced an invalid result."""


class SingularSystemError(NumericalError):
    """Steady state is not unique (near-singular linear system)."""


class InstabilityError(NumericalError):
    """Explicit time integration is unstable."""


class InvalidStateError(NumericalError):
    """Density matrix violates Hermiticity, unit trace or positivity."""


class NormalizationError(NumericalError):
    """Response normalization is undefined (v0 == vs) or saturation not reached."""


class ValidationFailure(RydbergLinkError):
    """One or more acceptance criteria failed."""
