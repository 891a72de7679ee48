"""Exception types raised across the package."""


class ScenarioError(ValueError):
    """A scenario file could not be parsed or failed validation."""


class SimulationFault(RuntimeError):
    """The simulated state became invalid (non-finite, out of bounds, undefined torque)."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        if t is not None:
            message = f"t={t:.6g} s: {message}"
        super().__init__(message)
