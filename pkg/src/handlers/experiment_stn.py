import asyncio
import logging
from pathlib import Path
from typing import Optional, Sequence

from services.analysis_service import AnalysisOptions, ProblemAnalysis, RunArtifacts, load_run
from services.core import UsageError
from services.export_service import ExportFormatter, ExportService
from services.problems import get_problem
from services.stn_service import merge_algorithms, stn_metrics
from utils.atomic import write_text_atomic
from utils.seeds import split_run_id, validate_run_id_format

logger = logging.getLogger(__name__)

STN_COLUMNS = ("algorithm", "nodes", "edges", "shared", "pf_nodes")


async def _load_config_runs(out_dir: Path, problem: str, config_name: str) -> list[RunArtifacts]:
    run_dir = out_dir / "runs" / problem / config_name
    paths = sorted(run_dir.glob("rep*.log"))
    if not paths:
        raise UsageError(f"No run logs for {problem}/{config_name} under {run_dir}")
    return list(
        await asyncio.gather(
            *(asyncio.to_thread(load_run, problem, config_name, int(p.stem[3:]), p) for p in paths)
        )
    )


def _parse_id(run_id: str) -> tuple[str, str]:
    if not validate_run_id_format(run_id):
        raise UsageError(f"Invalid id '{run_id}'; expected problem/config, e.g. zdt1/auto-moead")
    return split_run_id(run_id)


async def cmd_stn(
    out_dir: Path,
    base_id: str,
    variant_id: str,
    precision: int = 2,
    vector_ids: Optional[Sequence[int]] = None,
    stride: int = 1,
) -> dict[str, int]:
    """
    Merged STN of two algorithms on one problem.

    Each algorithm's per-vector STNs over all its runs are merged into one graph,
    the two graphs are merged, and the result is written as DOT and GraphML next
    to a metrics CSV (one row per algorithm plus the merged graph). Comparing a
    configuration with itself splits its runs into two halves.

    Raises:
        UsageError: malformed ids, ids on different problems, or missing logs
    """
    out_dir = Path(out_dir)
    problem_a, base = _parse_id(base_id)
    problem_b, variant = _parse_id(variant_id)
    if problem_a != problem_b:
        raise UsageError(f"Cannot merge STNs of different problems: {problem_a} and {problem_b}")
    problem = get_problem(problem_a)

    base_runs = await _load_config_runs(out_dir, problem.name, base)
    if base == variant:
        if len(base_runs) < 2:
            raise UsageError(f"Comparing {base_id} with itself needs at least two runs")
        half = len(base_runs) // 2
        groups = {f"{base}.1": base_runs[:half], f"{base}.2": base_runs[half:]}
        logger.info(f"Comparing {base_id} with itself: runs split {half}/{len(base_runs) - half}")
    else:
        groups = {base: base_runs, variant: await _load_config_runs(out_dir, problem.name, variant)}

    options = AnalysisOptions(
        precision=precision,
        vector_ids=tuple(vector_ids) if vector_ids is not None else None,
        stride=stride,
    )
    label_a, label_b = groups
    analysis = ProblemAnalysis(problem, groups, label_a, options)
    stn_a = await asyncio.to_thread(analysis.config_stn, label_a)
    stn_b = await asyncio.to_thread(analysis.config_stn, label_b)
    merged = merge_algorithms(stn_a, stn_b)

    rows = [
        {"algorithm": label_a, **stn_metrics(stn_a)},
        {"algorithm": label_b, **stn_metrics(stn_b)},
        {"algorithm": "merged", **stn_metrics(merged)},
    ]
    stem = out_dir / "stn" / problem.name / f"{base}__{variant}"
    await write_text_atomic(stem.with_suffix(".dot"), ExportService.export_graph(merged, "dot"))
    await write_text_atomic(stem.with_suffix(".graphml"), ExportService.export_graph(merged, "graphml"))
    await write_text_atomic(stem.with_suffix(".csv"), ExportService.generate_rows_csv(rows, STN_COLUMNS))

    for row in rows:
        logger.info(ExportFormatter.format_stn_metrics(row["algorithm"], row))
    logger.info(f"Merged STN written to {stem}.dot and {stem}.graphml")
    return rows[-1]
