"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Model or twist parameters outside their physical domain."""


class ConfigError(ValueError):
    """Bad grid, run configuration or CLI input."""


class NumericalError(RuntimeError):
    """A numerical routine failed (bracketing, factorization, ...)."""


class SingularMatrixError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    """Fixed-point iteration did not reach tolerance.

    ``trace`` holds the per-iteration residual history, ``phi`` the twist
    angle of the failed solve when known.
    """

    def __init__(self, msg, trace=None, phi=None, state=None):
        super().__init__(msg)
        self.trace = list(trace or [])
        self.phi = phi
        self.state = state
