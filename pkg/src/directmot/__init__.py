"""Direct multiobject tracking on raw multichannel array snapshots.

The package simulates multitone array scenes, tracks an unknown number of
sources either directly from the raw snapshots (covariance-level particle
belief propagation) or through a conventional detect-then-track pipeline,
and scores both against ground truth with the GOSPA metric.
"""

from .dynamics import BirthModel, GammaChain, MotionModel, constant_rate_model
from .metrics import GospaParams, GospaResult, gospa, gospa_series
from .scenario import (
    GroundTruthObject,
    MeasurementFrame,
    ScenarioConfig,
    generate,
    superpose,
    swellex_like_preset,
)
from .steering import (
    ArrayGeometry,
    SteeringField,
    WaveguideEnv,
    mode_set,
    steering_matrix,
    steering_vector,
)
from .tracker_baseline import BaselineConfig, BaselineTracker
from .tracker_direct import DirectTracker, DirectTrackerConfig
from .tracks import Estimate, NoiseBelief, PoBelief

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "BaselineConfig",
    "BaselineTracker",
    "BirthModel",
    "DirectTracker",
    "DirectTrackerConfig",
    "Estimate",
    "GammaChain",
    "GospaParams",
    "GospaResult",
    "GroundTruthObject",
    "MeasurementFrame",
    "MotionModel",
    "NoiseBelief",
    "PoBelief",
    "ScenarioConfig",
    "SteeringField",
    "WaveguideEnv",
    "constant_rate_model",
    "generate",
    "gospa",
    "gospa_series",
    "mode_set",
    "steering_matrix",
    "steering_vector",
    "superpose",
    "swellex_like_preset",
]
