"""Exception types shared across the package."""


class OukbError(Exception):
    """Base class for all package-specific errors."""


class DomainError(OukbError, ValueError):
    """An argument lies outside its admissible domain (parameter box, sign
    constraints, grid alignment preconditions, ...)."""


class InvalidModelError(OukbError, ValueError):
    """The coefficient maps violate the standing model conditions
    (a > 0, f != 0, b != 0 on the closed parameter box, sigma > 0)."""


class AlignmentError(OukbError, ValueError):
    """The simulation grid does not align with the integer times required
    by the unit-increment statistics."""


class InsufficientDataError(OukbError, ValueError):
    """Too few observations for the requested statistic or estimator."""


class DegenerateInformationError(OukbError, RuntimeError):
    """Fisher information is numerically singular at the supplied point."""


class DegenerateSampleError(OukbError, ValueError):
    """A sample with zero spread was handed to a distributional check."""
