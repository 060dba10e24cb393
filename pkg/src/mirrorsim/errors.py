class ConfigurationError(ValueError):
    """A parameter set violates a documented invariant."""


class ThresholdError(ValueError):
    """A below-threshold formula was evaluated at or above the oscillation threshold."""


class CalibrationError(RuntimeError):
    """The demodulation channels disagree by more than the allowed asymmetry."""


class FitError(RuntimeError):
    """An exponential fit could not be performed on the supplied correlation."""


class IntegratorDivergenceError(RuntimeError):
    """The integrated state became non-finite."""

    def __init__(self, step_index, time, message=None):
        self.step_index = int(step_index)
        self.time = float(time)
        super().__init__(
            message or f"state became non-finite at step {self.step_index} (t = {self.time:.6g} s)"
        )
