"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class MismatchedForceError(ValueError):
    """A parameterised first integral was evaluated against a different force."""


class IntegrationDiverged(RuntimeError):
    """The integrator produced a non-finite or runaway state."""

    def __init__(self, last_time: float, message: str = ""):
        self.last_time = float(last_time)
        super().__init__(message or f"integration diverged after t={self.last_time:g}")


class ConfigError(ValueError):
    """Scenario configuration is malformed or inconsistent."""
