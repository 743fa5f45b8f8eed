"""Exception hierarchy shared by all modules."""


class AlohaDiffusionError(Exception):
    """Base class for all numeric/runtime failures raised by this package."""


class DomainError(AlohaDiffusionError, ValueError):
    """A point lies on or outside the open domain where a formula is defined."""


class SingularConfigurationError(DomainError):
    """Some other player transmits with probability one, so a product of idle
    probabilities vanishes."""


class IndeterminateStabilityError(AlohaDiffusionError):
    """A Jacobian eigenvalue is too close to the imaginary axis to classify."""


class SimulationDivergedError(AlohaDiffusionError):
    def __init__(self, step: int, message: str = "non-finite state"):
        super().__init__(f"simulation diverged at step {step}: {message}")
        self.step = step


class ConfigError(ValueError):
    """Invalid experiment configuration. ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
