"""Exception types shared across the package."""


class BiconsError(Exception):
    """Base class for all package errors."""


class DomainError(BiconsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InadmissibleParameterError(BiconsError, ValueError):
    """The (eps, C) pair does not admit a positive potential interval."""


class CoverageError(BiconsError, ValueError):
    """A rho value lies outside the tabulated coverage of a profile."""


class IntegrationFailureError(BiconsError, RuntimeError):
    """An ODE integration collapsed below the minimum step size."""


class IntegrationQualityError(BiconsError, RuntimeError):
    """Frame drift exceeded the hard cap before correction."""


class ExportError(BiconsError, RuntimeError):
    """Mesh export failed (e.g. a grid point sits at the projection pole)."""
