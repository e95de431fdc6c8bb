"""cesim: finite-volume simulator for bacteria, oxygen and an incompressible
Euler flow in a square, with runtime monitors for a priori estimates."""

from cesim.config import SCENARIOS, SimConfig, load_config, parse_config, scenario_config
from cesim.errors import CesimError, CFLError, ConfigError, GhostFillError, MeshResolutionError, SolverError
from cesim.grid import BoundarySpec, FaceField, Grid, ScalarField
from cesim.monitors import MonitorSample, MonitorSeries, check_run
from cesim.simulate import RunResult, run

__version__ = "0.1.0"

__all__ = [
    "SCENARIOS",
    "BoundarySpec",
    "CFLError",
    "CesimError",
    "ConfigError",
    "FaceField",
    "GhostFillError",
    "Grid",
    "MeshResolutionError",
    "MonitorSample",
    "MonitorSeries",
    "RunResult",
    "ScalarField",
    "SimConfig",
    "SolverError",
    "check_run",
    "load_config",
    "parse_config",
    "run",
    "scenario_config",
]
