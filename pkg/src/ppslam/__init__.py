"""SLAM observer with prescribed performance guarantees on the landmark errors."""

from ._backend import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .errors import (ConfigInvalid, DegenerateMatrix, EnvelopeViolation, GainConditionWarning,
                     NonAntisymmetric, NonUnitQuaternion, PPSlamError, SingularLambda)
from .harness import (ExperimentConfig, RunLog, RunMetrics, compare_backends, emit_csv,
                      load_config, paper_config, read_csv, run, simulate)
from .lie import Pose, SlamState, aug_adjoint, skew, so3_exp, vee, wedge
from .observer import (MeasurementFrame, ObserverGains, ObserverState, evaluate,
                       quaternion_step, step)
from .ppf import (PerformanceEnvelope, envelope_at, envelope_from_initial_error, eta,
                  inverse_transform, smooth_transform)
from .world import ScenarioConfig, TruthState, paper_scenario

__version__ = "0.1.0"

__all__ = [
    "KERNEL_IMPLEMENTATION", "ConfigInvalid", "DegenerateMatrix", "EnvelopeViolation",
    "GainConditionWarning", "NonAntisymmetric", "NonUnitQuaternion", "PPSlamError",
    "SingularLambda", "ExperimentConfig", "RunLog", "RunMetrics", "compare_backends", "emit_csv",
    "load_config", "paper_config", "read_csv", "run", "simulate", "Pose", "SlamState",
    "aug_adjoint", "skew", "so3_exp", "vee", "wedge", "MeasurementFrame", "ObserverGains",
    "ObserverState", "evaluate", "quaternion_step", "step", "PerformanceEnvelope", "envelope_at",
    "envelope_from_initial_error", "eta", "inverse_transform", "smooth_transform",
    "ScenarioConfig", "TruthState", "paper_scenario",
]
