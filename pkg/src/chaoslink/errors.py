"""Exception hierarchy shared across the package."""


class ChaosLinkError(Exception):
    pass


class ConfigError(ChaosLinkError, ValueError):
    """Invalid scenario, distribution or run configuration."""


class DomainError(ChaosLinkError, ValueError):
    """Argument outside the mathematical domain of a function."""


class DegenerateSeed(ChaosLinkError, ValueError):
    """Chaotic map seed whose orbit collapses onto a fixed point."""


class TruncationError(ChaosLinkError, ArithmeticError):
    """A series did not reach the requested tolerance within its term cap."""


class FitError(ChaosLinkError, RuntimeError):
    """Curve fit did not converge; ``best`` carries the best-so-far result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
