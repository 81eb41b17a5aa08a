"""Exception hierarchy shared across the package."""


class GridCopulaError(Exception):
    """Base class for all package errors."""


class ValidationError(GridCopulaError, ValueError):
    """Invalid construction arguments (grids, copulas, configs)."""


class DomainError(GridCopulaError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DimensionMismatch(GridCopulaError, ValueError):
    pass


class GridMismatch(GridCopulaError, ValueError):
    pass


class NumericalError(GridCopulaError, ArithmeticError):
    pass


class EpsilonOutOfRange(GridCopulaError, ValueError):
    pass


class DegenerateGrid(GridCopulaError, ValueError):
    pass


class Unsupported(GridCopulaError, NotImplementedError):
    pass


class SingularWeights(GridCopulaError, ValueError):
    pass


class EmptyChain(GridCopulaError, ValueError):
    pass


class ChainFormatError(GridCopulaError, ValueError):
    pass


class DataError(GridCopulaError, ValueError):
    """Unreadable or malformed input data."""


class ConfigError(GridCopulaError, ValueError):
    """Invalid run or study configuration."""
