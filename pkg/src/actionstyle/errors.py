"""Exception types raised across the package."""


class ActionStyleError(Exception):
    """Base class for all package errors."""


class DegenerateConfigurationError(ActionStyleError, ValueError):
    """Collinear points, points at a camera center, rank-deficient designs."""


class InsufficientDataError(ActionStyleError, ValueError):
    pass


class ConditioningError(ActionStyleError, ArithmeticError):
    """A matrix that must be inverted is numerically singular."""


class InsufficientGeometryError(ActionStyleError, ArithmeticError):
    """Too few usable triplets to compute a pose-transition dissimilarity."""


class DimensionError(ActionStyleError, ValueError):
    pass


class FormatError(ActionStyleError, ValueError):
    """Malformed or unsupported file content."""


class ConfigurationError(ActionStyleError, ValueError):
    pass
