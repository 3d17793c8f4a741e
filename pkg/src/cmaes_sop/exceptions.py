class SoPError(Exception):
    """Base class for errors raised by this package."""


class InvalidDimensionError(SoPError, ValueError):
    pass


class InvalidFitnessError(SoPError, ValueError):
    pass


class NumericalError(SoPError, ArithmeticError):
    """A matrix factorization failed or the distribution state became non-finite."""


class InvalidSubspaceError(SoPError, ValueError):
    pass


class ConfigurationError(SoPError, ValueError):
    pass


class InvalidStateError(SoPError, RuntimeError):
    """ask/tell called out of order or after termination."""
