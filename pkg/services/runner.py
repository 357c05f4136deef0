"""Execution of independent runs and their on-disk artifacts.

Each task writes three files next to each other, all atomically:
    <out>/runs/<problem>/<config>/rep<NN>.log        run log
    <out>/runs/<problem>/<config>/rep<NN>.pop.csv    final population (run-log format)
    <out>/runs/<problem>/<config>/rep<NN>.meta.json  metadata
"""

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.atomic import write_text_atomic_sync
from utils.seeds import derive_seed, validate_run_id_format

from .core import AlgoConfig
from .engine import RunResult, run
from .problems import get_problem
from .runlog import render_runlog

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

METADATA_VERSION = 1


class RunTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    problem: str
    config_name: str
    config: AlgoConfig
    repetition: int
    out_dir: Path
    snapshot_evals: Optional[int] = None

    @property
    def run_dir(self) -> Path:
        return self.out_dir / "runs" / self.problem / self.config_name

    @property
    def stem(self) -> str:
        return f"rep{self.repetition:02d}"

    @property
    def log_path(self) -> Path:
        return self.run_dir / f"{self.stem}.log"

    @property
    def population_path(self) -> Path:
        return self.run_dir / f"{self.stem}.pop.csv"

    @property
    def metadata_path(self) -> Path:
        return self.run_dir / f"{self.stem}.meta.json"


class RunMetadata(BaseModel):
    version: int = METADATA_VERSION
    problem: str
    config_name: str
    repetition: int
    run_id: int
    seed: int
    config: dict
    switches: dict
    evaluations: int
    generations: int
    restarts: int
    archive_size: int


@dataclass(frozen=True)
class RunOutcome:
    task: RunTask
    ok: bool
    evaluations: int = 0
    generations: int = 0
    error: str | None = None


def write_run_artifacts(task: RunTask, result: RunResult) -> None:
    switches = result.switches
    write_text_atomic_sync(task.log_path, render_runlog(result.log.records, switches))
    write_text_atomic_sync(task.population_path, render_runlog(result.final_population, switches))
    metadata = RunMetadata(
        problem=task.problem,
        config_name=task.config_name,
        repetition=task.repetition,
        run_id=task.repetition,
        seed=task.config.seed,
        config=task.config.to_flat(),
        switches=switches,
        evaluations=result.evaluations,
        generations=result.generations,
        restarts=result.restarts,
        archive_size=len(result.archive),
    )
    write_text_atomic_sync(task.metadata_path, metadata.model_dump_json(indent=2) + "\n")


def execute_task(task: RunTask) -> RunOutcome:
    """Run one task and write its artifacts; failures are reported, not raised"""
    try:
        problem = get_problem(task.problem)
        result = run(task.config, problem, run_id=task.repetition, snapshot_evals=task.snapshot_evals)
        write_run_artifacts(task, result)
        logger.info(f"Finished {task.problem}/{task.config_name}#{task.repetition} -> {task.log_path}")
        return RunOutcome(task, True, result.evaluations, result.generations)
    except Exception as e:
        logger.error(f"Run {task.problem}/{task.config_name}#{task.repetition} failed: {e}", exc_info=True)
        return RunOutcome(task, False, error=str(e))


def map_parallel(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Apply fn to every item, in a process pool when workers > 1; order preserved"""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


async def run_tasks(tasks: list[RunTask], workers: int = 1) -> list[RunOutcome]:
    """Execute tasks from async code without blocking the event loop"""
    if workers <= 1:
        return [await asyncio.to_thread(execute_task, task) for task in tasks]
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [loop.run_in_executor(pool, execute_task, task) for task in tasks]
        return list(await asyncio.gather(*futures))


class NamedConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    config: AlgoConfig


class ExperimentPlan(BaseModel):
    """
    Problems x configurations x repetitions. The first configuration is the base
    the others are compared against.
    """

    model_config = ConfigDict(frozen=True)

    problems: tuple[str, ...] = Field(min_length=1)
    configs: tuple[NamedConfig, ...] = Field(min_length=1)
    repetitions: int = Field(default=10, ge=1)
    budget: Optional[int] = Field(default=None, gt=0)
    checkpoint: int = Field(default=1000, gt=0)
    master_seed: int = 1
    snapshot_evals: Optional[int] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_names(self):
        names = [c.name for c in self.configs]
        if len(set(names)) != len(names):
            raise ValueError(f"configuration names must be unique: {', '.join(names)}")
        for name in names:
            if not validate_run_id_format(f"x/{name}"):
                raise ValueError(f"invalid configuration name '{name}'")
        return self

    @property
    def base_name(self) -> str:
        return self.configs[0].name

    def validate_problems(self) -> None:
        for name in self.problems:
            get_problem(name)

    def tasks(self, out_dir: Path) -> list[RunTask]:
        """One task per (problem, configuration, repetition), seeds derived from the master seed"""
        tasks = []
        for problem in self.problems:
            for named in self.configs:
                config = named.config.replace(budget=self.budget) if self.budget else named.config
                for rep in range(self.repetitions):
                    seed = derive_seed(self.master_seed, problem, named.name, rep)
                    tasks.append(
                        RunTask(
                            problem=problem,
                            config_name=named.name,
                            config=config.replace(seed=seed),
                            repetition=rep,
                            out_dir=out_dir,
                            snapshot_evals=self.snapshot_evals,
                        )
                    )
        return tasks
