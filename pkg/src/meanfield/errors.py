"""Exception hierarchy shared by all modules."""


class MeanFieldError(Exception):
    """Base class for package errors."""


class ConfigError(MeanFieldError, ValueError):
    """Invalid parameters. ``field`` names the offending entry when known."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(MeanFieldError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(MeanFieldError, RuntimeError):
    """A numerical procedure failed at runtime."""


class SimulationDiverged(NumericalError):
    def __init__(self, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(f"network state became non-finite or exceeded bound at step {step} (t={time:.6g})")


class NumericalInstability(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NotGradientSystem(MeanFieldError, ValueError):
    """Off-diagonal disorder: the stationary covariance equations have no potential."""
