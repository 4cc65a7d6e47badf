class SketchRidgeError(Exception):
    """Base class for everything this package raises on purpose."""


class DomainError(SketchRidgeError, ValueError):
    """An argument is outside the domain the computation is defined on."""


class DimensionMismatch(DomainError):
    pass


class NonFiniteIntegrand(DomainError):
    pass


class BracketError(SketchRidgeError):
    """The self-consistent equation has no sign change on the search bracket."""


class NumericalFailure(SketchRidgeError):
    """A limit came out non-physical, e.g. a variance ratio at or above one."""


class ConfigError(SketchRidgeError):
    pass


class OutputError(SketchRidgeError):
    """Results could not be written."""
