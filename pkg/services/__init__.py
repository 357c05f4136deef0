from .core import AlgoConfig, MoeadError, ParetoSet, RunError, Solution, UsageError
from .engine import MoeadRun, run
from .export_service import ExportFormatter, ExportService
from .problems import ProblemSpec, get_problem, register_problem
from .runner import ExperimentPlan, RunTask

__all__ = [
    "AlgoConfig",
    "MoeadError",
    "ParetoSet",
    "RunError",
    "Solution",
    "UsageError",
    "MoeadRun",
    "run",
    "ExportFormatter",
    "ExportService",
    "ProblemSpec",
    "get_problem",
    "register_problem",
    "ExperimentPlan",
    "RunTask",
]
