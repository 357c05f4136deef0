"""Experiment catalog"""

from .database import close_db, create_tables, get_session, init_db
from .models import Base, ExperimentRun, RunMetric
from .repository import RunRepository

__all__ = [
    "Base",
    "ExperimentRun",
    "RunMetric",
    "init_db",
    "get_session",
    "create_tables",
    "close_db",
    "RunRepository",
]
