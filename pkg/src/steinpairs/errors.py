"""Exception types shared across the package."""


class SteinPairsError(Exception):
    """Base class for all package-specific errors."""


class NonsymmetricError(SteinPairsError):
    """A matrix required to be symmetric is not (beyond tolerance)."""


class NotPSDError(SteinPairsError):
    """A matrix required to be positive semi-definite has a negative eigenvalue."""


class SingularMatrixError(SteinPairsError):
    """Matrix inversion failed or the condition estimate is too large."""


class DegenerateDesignError(SteinPairsError):
    """The regression design matrix is numerically singular."""


class NoFineConditionalError(SteinPairsError):
    """The model cannot average its resampling step analytically."""


class DegenerateBoundError(SteinPairsError):
    """All bound ingredients vanish; the assembled bound is undefined."""


class NotTriangularError(SteinPairsError):
    """A matrix required to be lower triangular is not."""


class ZeroDiagonalError(SteinPairsError):
    """A triangular matrix has a (numerically) zero diagonal entry."""


class ConfigError(SteinPairsError):
    """Invalid experiment configuration; carries the offending field."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)
