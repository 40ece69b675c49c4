"""Exception types shared across the package."""


class AssocnetError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(AssocnetError):
    """Input data violates a documented precondition (shape, range, finiteness)."""


class DegenerateVarianceError(InvalidInputError):
    """A variable has zero variance, so correlations are undefined for it."""


class ParameterError(AssocnetError):
    """A configuration value is outside its allowed range."""


class ConvergenceError(AssocnetError):
    """An iterative solver failed to converge within its iteration budget."""
