"""Exception hierarchy shared across the package."""


class MisreportError(Exception):
    """Base class for all package errors."""


class DataError(MisreportError, ValueError):
    """Malformed or unusable input data."""


class InsufficientDataError(DataError):
    """Every estimation cell fell below the minimum count."""


class UnknownCategoryError(DataError, KeyError):
    """An instrument label outside the declared support was queried."""


class ConfigError(MisreportError, ValueError):
    """Invalid run configuration."""


class PreconditionError(MisreportError, ValueError):
    """Inputs do not satisfy the assumptions an operation requires."""


class BudgetExceededError(MisreportError, RuntimeError):
    """An enumeration or grid exceeds its configured size budget."""


class EstimationError(MisreportError, RuntimeError):
    """An estimator failed to produce a usable result."""
