"""Vehicular optical camera communication: link model and uRLLC rate optimisation."""

__version__ = "0.1.0"

from .config import (ConfigError, DistanceModel, Scenario, SystemParams, UrllcSpec, dbw_to_watts,
                     load_config, save_config, watts_to_dbw)
from .link import BPSK, DEFAULT_MODULATION_SET, ModulationScheme
from .calibration import CalibrationTarget, calibrate
from .optimizer import InfeasibleBudgetError, PolicySolution, Problem, solve_continuous, solve_discrete

__all__ = [
    "BPSK", "CalibrationTarget", "ConfigError", "DEFAULT_MODULATION_SET", "DistanceModel",
    "InfeasibleBudgetError", "ModulationScheme", "PolicySolution", "Problem", "Scenario",
    "SystemParams", "UrllcSpec", "calibrate", "dbw_to_watts", "load_config", "save_config",
    "solve_continuous", "solve_discrete", "watts_to_dbw",
]
