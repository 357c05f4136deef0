import asyncio
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from services.analysis_service import (
    AnalysisOptions,
    ProblemAnalysis,
    RunArtifacts,
    correlation_table,
    delta_table,
    discover_logs,
    load_run,
)
from services.core import UsageError
from services.export_service import ExportService
from services.problems import get_problem
from src.database import RunRepository, get_session
from src.database.models import RUN_DONE
from utils.atomic import write_text_atomic

from .catalog import open_catalog, relative_to

logger = logging.getLogger(__name__)


def _nullable(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return int(value)


async def _catalog_runs(out_dir: Path) -> list[tuple[int, str, str, int, Path]]:
    """Finished runs from the catalog; logs found on disk but missing from it are registered"""
    async with get_session() as session:
        repository = RunRepository(session)
        entries = await repository.list_runs(status=None)
        known = {(e.problem, e.config_name, e.repetition) for e in entries}
        found = [
            (e.id, e.problem, e.config_name, e.repetition, out_dir / e.log_path)
            for e in entries
            if e.status == RUN_DONE
        ]
        for problem, config_name, repetition, path in discover_logs(out_dir):
            if (problem, config_name, repetition) in known:
                continue
            entry = await repository.register_run(problem, config_name, repetition, 0, relative_to(path, out_dir))
            await repository.complete_run(entry.id, True)
            found.append((entry.id, problem, config_name, repetition, path))
            logger.info(f"Registered {problem}/{config_name}#{repetition} found on disk")
    return found


def _group(artifacts: Sequence[RunArtifacts], base: str) -> dict[str, dict[str, list[RunArtifacts]]]:
    by_problem: dict[str, dict[str, list[RunArtifacts]]] = defaultdict(lambda: defaultdict(list))
    for run in artifacts:
        by_problem[run.problem][run.config_name].append(run)
    grouped = {}
    for problem, configs in by_problem.items():
        if base not in configs:
            raise UsageError(
                f"Base configuration '{base}' has no runs on {problem}; "
                f"found: {', '.join(sorted(configs))}"
            )
        names = [base] + sorted(name for name in configs if name != base)
        grouped[problem] = {name: sorted(configs[name], key=lambda r: r.repetition) for name in names}
    return grouped


def _analyze(analysis: ProblemAnalysis, workers: int):
    rows = analysis.run_rows(workers)
    summary = analysis.summary(rows)
    return rows, summary, analysis.curves()


async def cmd_metrics(
    out_dir: Path,
    base: str,
    ref: float = 1.1,
    checkpoint: int = 1000,
    precision: int = 2,
    vector_ids: Optional[Sequence[int]] = None,
    stride: int = 1,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Compute performance and behavior metrics of every finished run in out_dir.

    Writes metrics/runs.csv (one row per run), metrics/summary.csv (means per
    problem and configuration with deltas against the base), mean anytime-HV
    curves under metrics/curves and Spearman correlations among the metrics.

    Raises:
        UsageError: no runs, or the base configuration is missing for a problem
    """
    out_dir = Path(out_dir)
    options = AnalysisOptions(
        ref=ref,
        checkpoint=checkpoint,
        precision=precision,
        vector_ids=tuple(vector_ids) if vector_ids is not None else None,
        stride=stride,
    )

    async with open_catalog(out_dir):
        entries = await _catalog_runs(out_dir)
        if not entries:
            raise UsageError(f"No finished runs under {out_dir}; execute a plan first")

        artifacts = await asyncio.gather(
            *(asyncio.to_thread(load_run, problem, name, rep, path) for _, problem, name, rep, path in entries)
        )
        catalog_ids = {(e[1], e[2], e[3]): e[0] for e in entries}
        grouped = _group(artifacts, base)

        run_tables, summaries = [], []
        metrics_dir = out_dir / "metrics"
        for problem_name, runs in grouped.items():
            logger.info(
                f"Analyzing {problem_name}: {len(runs)} configurations, "
                f"{sum(len(r) for r in runs.values())} runs"
            )
            analysis = ProblemAnalysis(get_problem(problem_name), runs, base, options)
            rows, summary, curves = await asyncio.to_thread(_analyze, analysis, workers)
            run_tables.append(rows)
            summaries.append(summary)
            for name, curve in curves.items():
                await write_text_atomic(
                    metrics_dir / "curves" / problem_name / f"{name}.csv", ExportService.generate_csv(curve)
                )

        run_table = pd.concat(run_tables, ignore_index=True)
        async with get_session() as session:
            repository = RunRepository(session)
            for row in run_table.to_dict("records"):
                await repository.save_metrics(
                    catalog_ids[(row["problem"], row["variant"], row["run_id"])],
                    hv=float(row["hv"]),
                    hv_ratio=float(row["hv_ratio"]),
                    auc=float(row["auc"]),
                    variance=float(row["variance"]),
                    pf_count=int(row["pf_count"]),
                    nodes=int(row["nodes"]),
                    edges=int(row["edges"]),
                    shared=_nullable(row["shared"]),
                )

        async with get_session() as session:
            stats = await RunRepository(session).get_catalog_stats()
        logger.info(
            f"Catalog: {stats['runs']} runs, {stats['done']} done, {stats['failed']} failed, "
            f"{stats['pending']} pending, {stats['with_metrics']} with metrics"
        )

    summary = delta_table(pd.concat(summaries, ignore_index=True), base)
    await write_text_atomic(metrics_dir / "runs.csv", ExportService.generate_csv(run_table))
    await write_text_atomic(metrics_dir / "summary.csv", ExportService.generate_csv(summary))
    await write_text_atomic(metrics_dir / "correlations.csv", ExportService.generate_csv(correlation_table(summary)))
    logger.info(f"Metrics of {len(run_table)} runs written to {metrics_dir}")
    return summary
