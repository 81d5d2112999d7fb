"""Run-time verification of a detector's false-positive rate."""

from .belief import (
    BeliefState,
    ZMode,
    belief_init,
    belief_update,
    confidence,
    posterior_mean,
    posterior_pdf,
    posterior_variance,
    truth_probability,
)
from .descriptor import bind_monitor, load_descriptor, validate_descriptor
from .monitor import MonitorEngine, MonitorSpec, Reason, Status, Verdict
from .predictor import Detection, PredictorState, calibrate_sigma
from .scenario import ScenarioConfig, generate, sigma_oracle
from .special import regularized_incomplete_beta

__version__ = "0.1.0"
