"""Exception hierarchy for leakopt."""


class LeakoptError(Exception):
    """Base class for all package errors."""


class NonHermitianInput(LeakoptError, ValueError):
    def __init__(self, violation):
        self.violation = float(violation)
        super().__init__(f"generator is not Hermitian: max |H - H^dag| = {self.violation:.3e}")


class DimensionMismatch(LeakoptError, ValueError):
    pass


class InfeasibleDuration(LeakoptError, ValueError):
    pass


class InsufficientResolution(LeakoptError, ValueError):
    pass


class GradientOracleMismatch(LeakoptError, RuntimeError):
    def __init__(self, deviation, tolerance):
        self.deviation = float(deviation)
        self.tolerance = float(tolerance)
        super().__init__(
            f"analytic gradient disagrees with finite differences: "
            f"{self.deviation:.3e} > {self.tolerance:.1e}"
        )


class NonFiniteFunctional(LeakoptError, FloatingPointError):
    pass


class ConfigError(LeakoptError, ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class NoPreset(LeakoptError, ValueError):
    pass
