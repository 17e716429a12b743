"""Energy-efficient power allocation for a two-hop NOMA V2X network with
ambient backscatter tags and imperfect channel knowledge."""

from .channel import ChannelRealization, generate_batch, generate_realization, realization_rng
from .config import ConfigError, NetworkConfig, dbm_to_watt, watt_to_dbm
from .oracle import GridSpec, feasibility_check, grid_search_p1, grid_search_p2, verify_suite
from .rates import PowerSolution, end_to_end_rates, energy_efficiency, icsi_interference, total_power
from .simulation import SweepPlan, SweepResult, compare_modes, run_realization, run_sweep
from .solver import (DualStateP1, DualStateP2, SolveOutcome, SolverSettings, Status, solve_algorithm1,
                     solve_p1, solve_p2)

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization", "ConfigError", "DualStateP1", "DualStateP2", "GridSpec", "NetworkConfig",
    "PowerSolution", "SolveOutcome", "SolverSettings", "Status", "SweepPlan", "SweepResult",
    "compare_modes", "dbm_to_watt", "end_to_end_rates", "energy_efficiency", "feasibility_check",
    "generate_batch", "generate_realization", "grid_search_p1", "grid_search_p2", "icsi_interference",
    "realization_rng", "run_realization", "run_sweep", "solve_algorithm1", "solve_p1", "solve_p2",
    "total_power", "verify_suite", "watt_to_dbm",
]
