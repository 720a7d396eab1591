"""Exception and warning types raised across the package."""


class FractmError(Exception):
    """Base class for all package errors."""


class GridError(FractmError, ValueError):
    """Invalid grid parameters or incompatible grids."""


class ExponentOverflowError(FractmError, OverflowError):
    """alpha * t**2 exceeded the double-precision exponent guard."""


class ResolutionError(FractmError, ValueError):
    """The grid is too coarse (or too short) for the requested profile."""


class ImaginaryResidueError(FractmError, ArithmeticError):
    """A transform of real data produced a non-negligible imaginary part."""


class ConstraintError(FractmError, ValueError):
    """An input violates the admissibility constraints of an operation."""


class SeriesTruncationError(FractmError, ArithmeticError):
    """A truncated series could not certify its tail at the requested order."""


class ConfigError(FractmError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class DilationWarning(UserWarning):
    """Dilation pushed non-negligible mass past the truncation boundary."""


class OptimizationError(FractmError, RuntimeError):
    """No start of a multi-start ascent produced a usable result."""
