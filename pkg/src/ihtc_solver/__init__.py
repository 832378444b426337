"""Integrated hospital timetabling: admission, rooms, theaters and nurses in one schedule."""
from .estimator import TimetableSolver
from .io import dump_instance, parse_instance, read_solution, write_solution
from .model import CostBreakdown, Instance, Schedule, Weights, check_hard, evaluate
from .orchestrator import RunConfig, RunReport, run

__all__ = [
    "CostBreakdown", "Instance", "RunConfig", "RunReport", "Schedule", "TimetableSolver", "Weights",
    "check_hard", "dump_instance", "evaluate", "parse_instance", "read_solution", "run", "write_solution",
]
__version__ = "0.1.0"
