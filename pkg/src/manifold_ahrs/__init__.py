"""Attitude estimation on the unit-quaternion manifold.

Chart-based extended Kalman filtering with one or two reference vectors,
TRIAD-aided magnetometer disturbance rejection, a synthetic magneto-inertial
sensor simulator and a scenario harness.
"""

from .charts import (
    CHART_KINDS,
    ChartDomainError,
    centered_chart_forward,
    centered_chart_inverse,
    chart_forward,
    chart_inverse,
    saturate,
)
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .harness import (
    LogFormatError,
    calibrate_references,
    ingest_log,
    run_scenario,
)
from .mekf import (
    FilterError,
    FilterState,
    Measurement,
    NoiseParams,
    ReferenceVectors,
    StepDiagnostics,
    init_state,
    predict,
    predict_measurement,
    step,
    update,
)
from .quat import (
    axis_angle,
    conjugate,
    quat_product,
    rotation_error,
    to_rotation_matrix,
)
from .sim import (
    DisturbanceModel,
    GroundTruthSample,
    TrajectorySegment,
    Vibration,
    generate_trajectory,
    hold,
    slew,
    synthesize_measurements,
)
from .triad import TriadDegenerateError, TriadFrame, triad, triad_measurement

__version__ = "0.1.0"

__all__ = [
    "CHART_KINDS",
    "ChartDomainError",
    "ConfigError",
    "DisturbanceModel",
    "FilterError",
    "FilterState",
    "GroundTruthSample",
    "LogFormatError",
    "Measurement",
    "NoiseParams",
    "ReferenceVectors",
    "ScenarioConfig",
    "StepDiagnostics",
    "TrajectorySegment",
    "TriadDegenerateError",
    "TriadFrame",
    "Vibration",
    "axis_angle",
    "calibrate_references",
    "centered_chart_forward",
    "centered_chart_inverse",
    "chart_forward",
    "chart_inverse",
    "conjugate",
    "generate_trajectory",
    "hold",
    "ingest_log",
    "init_state",
    "load_config",
    "parse_config",
    "predict",
    "predict_measurement",
    "quat_product",
    "rotation_error",
    "run_scenario",
    "saturate",
    "slew",
    "step",
    "synthesize_measurements",
    "to_rotation_matrix",
    "triad",
    "triad_measurement",
    "update",
]
