"""Large-N full counting statistics of the Brownian non-Hermitian SYK chain."""
from .errors import (ConfigError, ConvergenceError, NumericalError,
                     ParameterError, SingularMatrixError)
from .saddle import (ModelParams, SaddleParams, PhaseLabel, classify_phase,
                     solve_saddle, solve_saddle_symmetric, greens_frequency,
                     greens_equal_time)

__version__ = "0.1.0"
