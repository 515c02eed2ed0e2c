"""Asymptotic speed of birth-and-spread level-set equations on a square grid."""

from .analysis import SpeedSeries, fit_line, l2_error, level_radius, speed_estimate
from .estimator import SpeedEstimator
from .grid import Field, GridSpec
from .solvers import BlowUpError, ConfigError, SolverConfig, run, trotter_kato
from .sources import BallIndicator, L1Cone, RadialCone, RadialTable, TwinBalls, TwinCones
from .stencils import StencilParams

__version__ = "0.1.0"

__all__ = [
    "BallIndicator",
    "BlowUpError",
    "ConfigError",
    "Field",
    "GridSpec",
    "L1Cone",
    "RadialCone",
    "RadialTable",
    "SolverConfig",
    "SpeedEstimator",
    "SpeedSeries",
    "StencilParams",
    "TwinBalls",
    "TwinCones",
    "fit_line",
    "l2_error",
    "level_radius",
    "run",
    "speed_estimate",
    "trotter_kato",
]
