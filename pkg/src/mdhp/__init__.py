"""Multi-dimensional Hawkes process estimation, attack traffic simulation and detection."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DatasetError,
    DegenerateWindowError,
    DimensionMismatchError,
    MdhpError,
    NumericalError,
    SingleClassError,
)
from .hawkes import (
    EventSequences,
    MdhpParams,
    PaddedEvents,
    gamma_closed_form,
    grad_log_likelihood,
    intensity_at,
    log_likelihood,
    log_likelihood_naive,
    pad_and_stack,
)
from .simulate import SimConfig, simulate_mdhp
from .solver import EstimationResult, SolverConfig, batch_estimate, estimate, standardize
