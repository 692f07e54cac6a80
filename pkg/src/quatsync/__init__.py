"""Quaternionic Kuramoto oscillators: model, integrators and analysis tools."""

from ._version import __version__
from .diagnostics import SyncReport, classify, pairwise_q_diff, pairwise_qdot_diff
from .errors import (BlowUp, ConfigError, HypothesisViolated, MaxStepsExceeded, NoReturn,
                     NotEquilibrium, NotInM, NotWeak, QuatsyncError)
from .integrate import IntegratorConfig, Trajectory, find_section_crossing, integrate, step_rk4
from .lion_dance import LionParams, classify_regime, equilibrium_sweep, lambda_critical
from .model import ModelParams, OscillatorState, critical_coupling, rhs_full, to_rotating_frame
from .quaternion import Quaternion, embed, quat_cos, quat_exp, quat_sin, unembed
from .two_oscillator import PlanarState, detect_periodic_orbit, equilibrium_n2

__all__ = [
    "__version__",
    "BlowUp", "ConfigError", "HypothesisViolated", "MaxStepsExceeded", "NoReturn",
    "NotEquilibrium", "NotInM", "NotWeak", "QuatsyncError",
    "IntegratorConfig", "Trajectory", "find_section_crossing", "integrate", "step_rk4",
    "LionParams", "classify_regime", "equilibrium_sweep", "lambda_critical",
    "ModelParams", "OscillatorState", "critical_coupling", "rhs_full", "to_rotating_frame",
    "Quaternion", "embed", "quat_cos", "quat_exp", "quat_sin", "unembed",
    "PlanarState", "detect_periodic_orbit", "equilibrium_n2",
    "SyncReport", "classify", "pairwise_q_diff", "pairwise_qdot_diff",
]
