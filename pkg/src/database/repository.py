import logging
from typing import Optional

from sqlalchemy import select
from sqlalchemy.ext.asyncio import AsyncSession
from sqlalchemy.orm import selectinload

from .models import RUN_DONE, RUN_FAILED, RUN_PENDING, ExperimentRun, RunMetric

logger = logging.getLogger(__name__)

METRIC_FIELDS = ("hv", "hv_ratio", "auc", "variance", "pf_count", "nodes", "edges", "shared")


class RunRepository:
    """All catalog operations, kept apart from the experiment logic"""

    def __init__(self, session: AsyncSession):
        self.session = session

    async def get_run(self, problem, config_name, repetition) -> Optional[ExperimentRun]:
        stmt = select(ExperimentRun).where(
            ExperimentRun.problem == problem,
            ExperimentRun.config_name == config_name,
            ExperimentRun.repetition == repetition,
        )
        result = await self.session.execute(stmt)
        return result.scalar_one_or_none()

    async def register_run(self, problem, config_name, repetition, seed, log_path) -> ExperimentRun:
        """
        Register a planned run, or reset an existing entry to pending
        """
        run = await self.get_run(problem, config_name, repetition)
        if run is None:
            run = ExperimentRun(
                problem=problem,
                config_name=config_name,
                repetition=repetition,
                seed=seed,
                log_path=log_path,
            )
            self.session.add(run)
        else:
            run.seed = seed
            run.log_path = log_path
            run.status = RUN_PENDING
        await self.session.flush()
        await self.session.refresh(run)
        logger.debug(f"Registered run {problem}/{config_name}#{repetition} (ID: {run.id})")
        return run

    async def complete_run(self, run_id, ok, evaluations=0, generations=0):
        run = await self.session.get(ExperimentRun, run_id)
        if run is None:
            logger.warning(f"Run ID {run_id} not found in catalog")
            return None
        run.status = RUN_DONE if ok else RUN_FAILED
        run.evaluations = evaluations
        run.generations = generations
        await self.session.flush()
        return run

    async def list_runs(self, problem=None, config_name=None, status=RUN_DONE) -> list[ExperimentRun]:
        stmt = select(ExperimentRun).options(selectinload(ExperimentRun.metric))
        if problem is not None:
            stmt = stmt.where(ExperimentRun.problem == problem)
        if config_name is not None:
            stmt = stmt.where(ExperimentRun.config_name == config_name)
        if status is not None:
            stmt = stmt.where(ExperimentRun.status == status)
        stmt = stmt.order_by(ExperimentRun.problem, ExperimentRun.config_name, ExperimentRun.repetition)
        result = await self.session.execute(stmt)
        runs = list(result.scalars().all())
        logger.debug(f"Catalog returned {len(runs)} runs")
        return runs

    async def save_metrics(self, run_id, **values) -> RunMetric:
        """Insert or replace the metric row of a run"""
        missing = [f for f in METRIC_FIELDS if f not in values]
        if missing:
            raise ValueError(f"Missing metric values: {', '.join(missing)}")
        stmt = select(RunMetric).where(RunMetric.run_id == run_id)
        metric = (await self.session.execute(stmt)).scalar_one_or_none()
        if metric is None:
            metric = RunMetric(run_id=run_id)
            self.session.add(metric)
        for name in METRIC_FIELDS:
            setattr(metric, name, values[name])
        await self.session.flush()
        return metric

    async def get_catalog_stats(self) -> dict:
        runs = await self.list_runs(status=None)
        return {
            "runs": len(runs),
            "done": sum(1 for r in runs if r.status == RUN_DONE),
            "failed": sum(1 for r in runs if r.status == RUN_FAILED),
            "pending": sum(1 for r in runs if r.status == RUN_PENDING),
            "with_metrics": sum(1 for r in runs if r.metric is not None),
        }
