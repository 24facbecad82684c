"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An input lies outside the physical domain of an operation."""


class InfeasibleTargetError(DomainError):
    """A requested target (e.g. squeezing level) cannot be reached for any
    valid pump parameter."""


class DegenerateProblemError(RuntimeError):
    """A fit problem is singular (normal matrix not invertible)."""


class InstabilityError(DomainError):
    """The cavity geometry does not support a Gaussian eigenmode."""


class DispersionRangeError(DomainError):
    """A refractive-index evaluation was requested outside the declared
    validity range of the dispersion data."""


class ScanResolutionError(DomainError):
    """A resonance scan step is too coarse to resolve the round-trip phase."""


class TraceFormatError(ValueError):
    """A trace CSV file violates the expected format."""
