"""Exception hierarchy shared by every module of the package."""


class ObtuseLabError(Exception):
    """Base class for all package errors."""


class DomainError(ObtuseLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidTriangleError(DomainError):
    """A side triple violates the triangle inequality or the perimeter bound."""


class SpecError(ObtuseLabError, ValueError):
    """A space description failed to parse or validate."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class CapabilityError(ObtuseLabError):
    """The space does not provide a capability the estimator needs."""


class NonConvergenceError(ObtuseLabError):
    """A numerical procedure failed to reach the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (best residual {residual:.3e})")
        self.residual = residual
