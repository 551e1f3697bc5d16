"""Quasi-static locomotion experiments for an elongate modular robot.

The package splits into thin layers: morphology (kinematic model and body
shapes), gait (joint-angle waves), simcore (ground contact and the
quasi-static stepper), metrics (per-trial measurements), experiment (sweeps
and regime classification), config/plots/cli (the run harness).
"""

from .config import Config, ConfigError, load_config, parse_config, serialize_config
from .experiment import (
    BehaviorDiagram,
    PhaseSweepTable,
    RegimeLabel,
    SweepSpec,
    TrialRecord,
    Variant,
    classify_regime,
    phase_offset_sweep,
    resolve_variants,
    run_sweep,
)
from .gait import GaitParams, ParameterGrid, eval_gait, make_grid, rolling_gait, rolling_params
from .metrics import EnergyProfile, TrialMetrics, compute_metrics, energy_barrier
from .morphology import LegSpec, RobotModel, build_model, forward_kinematics
from .simcore import TrialConfig, Trajectory, save_trajectory, simulate

__version__ = "0.1.0"

__all__ = [
    "BehaviorDiagram",
    "Config",
    "ConfigError",
    "EnergyProfile",
    "GaitParams",
    "LegSpec",
    "ParameterGrid",
    "PhaseSweepTable",
    "RegimeLabel",
    "RobotModel",
    "SweepSpec",
    "TrialConfig",
    "TrialMetrics",
    "TrialRecord",
    "Trajectory",
    "Variant",
    "build_model",
    "classify_regime",
    "compute_metrics",
    "energy_barrier",
    "eval_gait",
    "forward_kinematics",
    "load_config",
    "make_grid",
    "parse_config",
    "phase_offset_sweep",
    "resolve_variants",
    "rolling_gait",
    "rolling_params",
    "run_sweep",
    "save_trajectory",
    "serialize_config",
    "simulate",
    "__version__",
]
