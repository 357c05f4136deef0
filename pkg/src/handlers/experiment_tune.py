import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from services.core import UsageError
from services.export_service import ExportService
from services.problems import get_problem
from services.runner import NamedConfig
from services.tuning_service import (
    DEFAULT_ELITES,
    AblationResult,
    Instance,
    RunScorer,
    TuneResult,
    ablate,
    tune,
)
from utils.atomic import write_text_atomic
from utils.config_files import load_space, write_config
from utils.seeds import derive_seed, instance_seeds

logger = logging.getLogger(__name__)

TUNED_NAME = "tuned"


def make_instances(problems: Sequence[str], per_problem: int, master_seed: int) -> list[Instance]:
    """(problem, seed) pairs, problems interleaved so every prefix covers them evenly"""
    if per_problem < 1:
        raise UsageError(f"At least one instance per problem required, got {per_problem}")
    for name in problems:
        get_problem(name)
    seeds = {name: instance_seeds(master_seed, name, per_problem) for name in problems}
    return [Instance(name, seeds[name][i]) for i in range(per_problem) for name in problems]


def race_rows(result: TuneResult) -> list[dict]:
    rows = []
    for iteration, outcome in enumerate(result.races, start=1):
        eliminated = dict(outcome.eliminated)
        rank = {index: position for position, index in enumerate(outcome.survivors, start=1)}
        for index, config in enumerate(outcome.entrants):
            rows.append(
                {
                    "iteration": iteration,
                    "entrant": index,
                    "instances": len(outcome.scores[index]),
                    "mean_score": outcome.mean_score(index),
                    "survivor_rank": rank.get(index),
                    "eliminated_at": eliminated.get(index),
                    **{k: v for k, v in config.to_flat().items() if k != "seed"},
                }
            )
    return rows


def ablation_rows(result: AblationResult) -> list[dict]:
    rows = [{"step": 0, "flipped": "", "score": result.source_score, "candidates": ""}]
    for step_no, step in enumerate(result.steps, start=1):
        candidates = "; ".join(f"{','.join(names)}={score:.6g}" for names, score in step.candidates.items())
        rows.append(
            {"step": step_no, "flipped": ",".join(step.flipped), "score": step.score, "candidates": candidates}
        )
    return rows


async def cmd_tune(
    space_path: Path,
    problems: Sequence[str],
    out_dir: Path,
    instances: int = 10,
    budget_runs: int = 500,
    elites: int = DEFAULT_ELITES,
    master_seed: int = 1,
    run_budget: Optional[int] = None,
    checkpoint: int = 1000,
    ref: float = 1.1,
    workers: int = 1,
) -> NamedConfig:
    """
    Tune a parameter space by iterated racing on (problem, seed) instances.

    Writes tune/tuned.cfg (readable by plan files), tune/race.csv with every
    entrant of every race, and tune/summary.txt.

    Raises:
        UsageError: malformed space file, unknown problem or unusable budget
    """
    out_dir = Path(out_dir)
    space = load_space(space_path)
    race_instances = make_instances(problems, instances, master_seed)
    scorer = RunScorer(checkpoint=checkpoint, ref=ref, budget=run_budget, workers=workers)
    rng = np.random.default_rng(derive_seed(master_seed, "tune", Path(space_path).stem, 0))
    logger.info(
        f"Tuning {len(space.tunable)} parameters on {len(race_instances)} instances, budget {budget_runs} runs"
    )

    result = tune(space, race_instances, budget_runs, rng, elites=elites, scorer=scorer)
    best = NamedConfig(name=TUNED_NAME, config=result.best.replace(seed=0))

    tune_dir = out_dir / "tune"
    await write_text_atomic(tune_dir / f"{TUNED_NAME}.cfg", write_config(best.name, best.config))
    rows = race_rows(result)
    if rows:
        await write_text_atomic(tune_dir / "race.csv", ExportService.generate_rows_csv(rows, rows[0].keys()))
    summary = [
        f"space: {space_path}",
        f"instances: {len(race_instances)} ({', '.join(problems)})",
        f"races: {len(result.races)}",
        f"runs used: {result.runs_used} of {budget_runs} (executed {scorer.runs})",
        "best: " + " ".join(f"{k}={v}" for k, v in best.config.to_flat().items() if k != "seed"),
    ]
    await write_text_atomic(tune_dir / "summary.txt", "\n".join(summary) + "\n")
    logger.info(f"Best configuration written to {tune_dir / f'{TUNED_NAME}.cfg'}")
    return best


async def cmd_ablate(
    source: NamedConfig,
    target: NamedConfig,
    problems: Sequence[str],
    out_dir: Path,
    instances: int = 5,
    master_seed: int = 1,
    run_budget: Optional[int] = None,
    checkpoint: int = 1000,
    ref: float = 1.1,
    workers: int = 1,
) -> AblationResult:
    """
    Greedy ablation path from source to target; writes
    ablation/<source>__<target>.csv with one row per adopted step.
    """
    out_dir = Path(out_dir)
    path_instances = make_instances(problems, instances, master_seed)
    scorer = RunScorer(checkpoint=checkpoint, ref=ref, budget=run_budget, workers=workers)
    logger.info(f"Ablating {source.name} -> {target.name} on {len(path_instances)} instances")

    result = ablate(source.config, target.config, path_instances, scorer)

    rows = ablation_rows(result)
    rows.append({"step": "target", "flipped": "", "score": result.target_score, "candidates": ""})
    path = out_dir / "ablation" / f"{source.name}__{target.name}.csv"
    await write_text_atomic(path, ExportService.generate_rows_csv(rows, ("step", "flipped", "score", "candidates")))
    logger.info(f"Ablation path of {len(result.steps)} steps written to {path} ({scorer.runs} runs)")
    return result
