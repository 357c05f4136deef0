import logging
from pathlib import Path

from services.core import RunError
from services.runner import ExperimentPlan, RunOutcome, run_tasks
from src.database import RunRepository, get_session
from utils.atomic import write_text_atomic
from utils.config_files import write_config

from .catalog import open_catalog, relative_to

logger = logging.getLogger(__name__)


async def cmd_run(plan: ExperimentPlan, out_dir: Path, workers: int = 1) -> list[RunOutcome]:
    """
    Execute every (problem, configuration, repetition) of a plan.

    Writes one run log, final population and metadata file per run plus the
    configuration files used, and records the runs in the catalog.

    Raises:
        UsageError: unknown problem (checked before anything runs)
        RunError: at least one run failed
    """
    out_dir = Path(out_dir)
    plan.validate_problems()
    tasks = plan.tasks(out_dir)
    logger.info(
        f"Running {len(tasks)} runs: {len(plan.problems)} problems x {len(plan.configs)} configs "
        f"x {plan.repetitions} repetitions, {workers} workers"
    )

    for named in plan.configs:
        await write_text_atomic(out_dir / "configs" / f"{named.name}.cfg", write_config(named.name, named.config))

    async with open_catalog(out_dir):
        async with get_session() as session:
            repository = RunRepository(session)
            catalog_ids = []
            for task in tasks:
                entry = await repository.register_run(
                    task.problem,
                    task.config_name,
                    task.repetition,
                    task.config.seed,
                    relative_to(task.log_path, out_dir),
                )
                catalog_ids.append(entry.id)

        outcomes = await run_tasks(tasks, workers)

        async with get_session() as session:
            repository = RunRepository(session)
            for catalog_id, outcome in zip(catalog_ids, outcomes):
                await repository.complete_run(catalog_id, outcome.ok, outcome.evaluations, outcome.generations)

    failed = [o for o in outcomes if not o.ok]
    if failed:
        for outcome in failed:
            logger.error(
                f"Failed: {outcome.task.problem}/{outcome.task.config_name}#{outcome.task.repetition}: {outcome.error}"
            )
        raise RunError(f"{len(failed)} of {len(outcomes)} runs failed")
    logger.info(f"All {len(outcomes)} runs finished, logs under {out_dir / 'runs'}")
    return outcomes
