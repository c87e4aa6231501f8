"""Repeated-game defense against selective forwarding in a clustered WSN."""

from .baselines import run_no_defense, run_one_shot, run_scenario
from .config import SimConfig, load_config
from .engine import Scenario, SimResult, run_simulation, simulate
from .errors import ConfigError, UsageError
from .metrics import MetricsBundle, compute_metrics, export, lost_power, normalize_dt, read_jsonl

__all__ = [
    "ConfigError", "MetricsBundle", "Scenario", "SimConfig", "SimResult", "UsageError",
    "compute_metrics", "export", "load_config", "lost_power", "normalize_dt", "read_jsonl",
    "run_no_defense", "run_one_shot", "run_scenario", "run_simulation", "simulate",
]
__version__ = "0.1.0"
