"""Deterministic simulator of data survivability in heterogeneous mobile robot networks."""

from .config import ExperimentConfig, load_config
from .engine import RunHistory, SimulationRun, run
from .harness import run_matrix
from .metrics import MetricsReport, compute_report
from .scenario import generate_scenario

__all__ = ["ExperimentConfig", "load_config", "RunHistory", "SimulationRun", "run",
           "run_matrix", "MetricsReport", "compute_report", "generate_scenario"]
__version__ = "0.1.0"
