"""Exception types raised across the package."""


class ShapeError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class DomainError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class RepresentationError(RuntimeError):
    """A generator could not be written in the requested representation."""


class ConstructionError(ValueError):
    pass


class IntegrationError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass
