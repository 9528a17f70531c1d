"""Exception types raised across the package."""


class OutOfDomainError(ValueError):
    """A point lies outside the closed computational rectangle."""


class InvalidCorrelationError(ValueError):
    """A correlation value falls outside [-1, 1] beyond roundoff."""


class DegenerateDiffusionError(ValueError):
    """A diffusion coefficient is zero or negative where positivity is required."""


class CoefficientAssumptionError(ValueError):
    """A coefficient field violates a standing assumption (e.g. r <= 0)."""


class TransformUnavailableError(ValueError):
    """The strict-positivity transform cannot be built from the given fields."""


class InvalidHittingTimeError(ValueError):
    """A hitting time passed to the weight formulas is not strictly positive."""


class ReflectionOvershootError(ValueError):
    """A reflected branch endpoint still lies outside the domain; the grid is too coarse."""


class SeamMismatchError(ValueError):
    """Coefficient fields disagree across the periodic seam."""


class NumericalFailureError(RuntimeError):
    """A non-finite value appeared during iteration."""


class RegistrationError(ValueError):
    """A problem case failed its PDE-residual self-check at registration."""
