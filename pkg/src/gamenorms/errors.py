"""Exception types raised across the package."""


class GameNormsError(Exception):
    """Base class for all package errors."""


class DegeneratePayoffs(GameNormsError):
    """Raised when R == P, so the UV transform is undefined."""


class DegenerateUtility(GameNormsError):
    """Raised when a utility maps the payoffs 1 and 0 to the same value."""


class NoConvergence(GameNormsError):
    """The damped QRE iteration hit its iteration cap above tolerance.

    The last iterate is kept on the exception so callers can decide what to
    do with it.
    """

    def __init__(self, message, p1c=None, p2c=None, iterations=0, residual=float("nan")):
        super().__init__(message)
        self.p1c = p1c
        self.p2c = p2c
        self.iterations = iterations
        self.residual = residual


class InvalidTopologyParams(GameNormsError):
    """Network generator parameters cannot produce the requested graph."""


class ConfigError(GameNormsError):
    """Configuration could not be parsed or validated."""


class NumericalBudgetExceeded(GameNormsError):
    """Too many numerical failures during a command."""
