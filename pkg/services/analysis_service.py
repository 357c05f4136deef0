"""Experiment-level analysis: per-run metrics, per-configuration summaries with
deltas against the base configuration, mean anytime curves, metric
correlations and STNs built from a directory of run logs."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import networkx as nx
import numpy as np
import pandas as pd

from .core import UsageError
from .decomposition import tracked_vectors
from .metrics_service import (
    DEFAULT_REF,
    ParetoReference,
    anytime_hv,
    feasible_front,
    hv_ratio,
    hypervolume_with_error,
    metric_correlations,
    population_variance,
    reference_point,
)
from .problems import ProblemSpec, objective_bounds, scale_with
from .runlog import RunLog, read_runlog
from .runner import map_parallel
from .stn_service import build_vector_stn, merge_algorithms, merge_stns, stn_metrics

logger = logging.getLogger(__name__)

RUN_COLUMNS = (
    "problem", "variant", "run_id", "hv", "hv_ratio", "hv_sd", "auc",
    "nodes", "edges", "shared", "variance", "pf_count",
)
SUMMARY_METRICS = ("hv", "hv_ratio", "auc", "nodes", "edges", "variance", "pf_count")
CORRELATED_METRICS = ("hv", "nodes", "edges", "shared", "variance", "pf_count")


@dataclass(frozen=True, eq=False)
class RunArtifacts:
    problem: str
    config_name: str
    repetition: int
    log: RunLog
    population: np.ndarray
    budget: Optional[int] = None


@dataclass(frozen=True)
class AnalysisOptions:
    ref: float = DEFAULT_REF
    checkpoint: int = 1000
    precision: int = 2
    vector_ids: Optional[tuple[int, ...]] = None
    stride: int = 1


def discover_logs(out_dir: Path) -> list[tuple[str, str, int, Path]]:
    """(problem, config, repetition, log path) of every run log under out_dir/runs"""
    found = []
    for path in sorted(Path(out_dir, "runs").glob("*/*/rep*.log")):
        try:
            repetition = int(path.stem[3:])
        except ValueError:
            logger.warning(f"Skipping unexpected file {path}")
            continue
        found.append((path.parent.parent.name, path.parent.name, repetition, path))
    return found


def load_run(problem: str, config_name: str, repetition: int, log_path: Path) -> RunArtifacts:
    """Run log plus its companion final population and metadata files"""
    log_path = Path(log_path)
    if not log_path.exists():
        raise UsageError(f"Run log not found: {log_path}")
    log = RunLog.from_path(log_path)
    pop_path = log_path.with_name(f"{log_path.stem}.pop.csv")
    population = np.array([r.x for r in read_runlog(pop_path)]) if pop_path.exists() else np.empty((0, 0))
    meta_path = log_path.with_name(f"{log_path.stem}.meta.json")
    budget = None
    if meta_path.exists():
        budget = json.loads(meta_path.read_text(encoding="utf-8"))["config"].get("budget")
    return RunArtifacts(problem, config_name, repetition, log, population, budget)


def pooled_bounds(runs: Sequence[RunArtifacts]):
    """Objective bounds over the feasible final archives of all runs (None if none is feasible)"""
    fronts = [f for f in (feasible_front(r.log) for r in runs) if f.size]
    if not fronts:
        return None
    return objective_bounds(np.vstack(fronts))


def final_fronts(runs: Sequence[RunArtifacts]) -> list[np.ndarray]:
    return [f for f in (feasible_front(r.log) for r in runs) if f.size]


def vectors_for(problem: ProblemSpec, vector_ids: Optional[Sequence[int]]) -> tuple[np.ndarray, list[int]]:
    weights = tracked_vectors(problem.m)
    ids = list(vector_ids) if vector_ids is not None else list(range(len(weights)))
    for i in ids:
        if not 0 <= i < len(weights):
            raise UsageError(f"Vector id {i} out of range (0..{len(weights) - 1}) for {problem.name}")
    return weights, ids


def build_stn(
    runs: Sequence[RunArtifacts],
    problem: ProblemSpec,
    origin: str,
    scale,
    options: AnalysisOptions,
    reference: Optional[ParetoReference] = None,
) -> nx.DiGraph:
    """STN of one algorithm: per-vector graphs over its runs, merged across vectors"""
    weights, ids = vectors_for(problem, options.vector_ids)
    is_pareto = (lambda f: bool(reference.contains(f)[0])) if reference is not None else None
    logs = [r.log for r in runs]
    graphs = [
        build_vector_stn(
            logs, vid, weights, options.precision, problem.bounds, scale,
            problem=problem.name, is_pareto=is_pareto, stride=options.stride, origin=origin,
        )
        for vid in ids
    ]
    return merge_stns(graphs)


def _run_row(job) -> dict:
    problem, run, bounds, options, reference, base_run = job
    ref = reference_point(problem.m, options.ref)
    front = feasible_front(run.log)
    if bounds is None or front.size == 0:
        hv, se, auc = 0.0, 0.0, 0.0
    else:
        hv, se = hypervolume_with_error(scale_with(front, *bounds), ref)
        auc = anytime_hv(run.log, ref, options.checkpoint, run.budget, bounds).auc
    scale = bounds if bounds is not None else (np.zeros(problem.m), np.ones(problem.m))
    stn = build_stn([run], problem, run.config_name, scale, options, reference)
    shared = None
    if base_run is not None:
        base_stn = build_stn([base_run], problem, base_run.config_name, scale, options, reference)
        shared = stn_metrics(merge_algorithms(base_stn, stn))["shared"]
    counts = stn_metrics(stn)
    return {
        "problem": run.problem,
        "variant": run.config_name,
        "run_id": run.repetition,
        "hv": hv,
        "hv_ratio": hv_ratio(hv, problem.m, options.ref),
        "hv_sd": se,
        "auc": auc,
        "nodes": counts["nodes"],
        "edges": counts["edges"],
        "shared": shared,
        "variance": population_variance(run.population, problem.bounds) if run.population.size else 0.0,
        "pf_count": int(np.sum(reference.contains(front))) if reference is not None and front.size else 0,
    }


@dataclass
class ProblemAnalysis:
    """All runs of one problem grouped by configuration; the base comes first"""

    problem: ProblemSpec
    runs: dict[str, list[RunArtifacts]]
    base: str
    options: AnalysisOptions = field(default_factory=AnalysisOptions)

    def __post_init__(self):
        everything = [r for group in self.runs.values() for r in group]
        self.bounds = pooled_bounds(everything)
        fronts = final_fronts(everything)
        if self.problem.pf_oracle is not None or fronts:
            self.reference = ParetoReference(self.problem, fronts)
        else:
            self.reference = None

    @property
    def scale(self):
        if self.bounds is None:
            return np.zeros(self.problem.m), np.ones(self.problem.m)
        return self.bounds

    def run_rows(self, workers: int = 1) -> pd.DataFrame:
        base_runs = {r.repetition: r for r in self.runs.get(self.base, [])}
        jobs = []
        for name, runs in self.runs.items():
            for run in runs:
                base_run = base_runs.get(run.repetition) if name != self.base else None
                jobs.append((self.problem, run, self.bounds, self.options, self.reference, base_run))
        rows = map_parallel(_run_row, jobs, workers)
        return pd.DataFrame(rows, columns=list(RUN_COLUMNS))

    def config_stn(self, name: str) -> nx.DiGraph:
        if name not in self.runs:
            raise UsageError(f"No runs of configuration '{name}' on {self.problem.name}")
        return build_stn(self.runs[name], self.problem, name, self.scale, self.options, self.reference)

    def summary(self, run_rows: pd.DataFrame) -> pd.DataFrame:
        """Per-configuration means; STN columns come from the STN aggregated over runs"""
        base_stn = self.config_stn(self.base) if self.base in self.runs else None
        rows = []
        for name in self.runs:
            own = run_rows[run_rows["variant"] == name]
            stn = self.config_stn(name)
            counts = stn_metrics(stn)
            shared = None
            if base_stn is not None and name != self.base:
                shared = stn_metrics(merge_algorithms(base_stn, stn))["shared"]
            rows.append(
                {
                    "problem": self.problem.name,
                    "variant": name,
                    "runs": len(own),
                    "hv": own["hv"].mean(),
                    "hv_sd": own["hv"].std(ddof=1) if len(own) > 1 else 0.0,
                    "hv_ratio": own["hv_ratio"].mean(),
                    "auc": own["auc"].mean(),
                    "nodes": counts["nodes"],
                    "edges": counts["edges"],
                    "shared": shared,
                    "pf_nodes": counts["pf_nodes"],
                    "variance": own["variance"].mean(),
                    "pf_count": own["pf_count"].mean(),
                }
            )
        return pd.DataFrame(rows)

    def curves(self) -> dict[str, pd.DataFrame]:
        """Checkpoint-wise mean and SD of the anytime HV per configuration"""
        ref = reference_point(self.problem.m, self.options.ref)
        result = {}
        for name, runs in self.runs.items():
            per_run = [anytime_hv(r.log, ref, self.options.checkpoint, r.budget, self.scale).checkpoints for r in runs]
            length = min((len(c) for c in per_run), default=0)
            evals = [e for e, _ in per_run[0][:length]] if length else []
            values = np.array([[hv for _, hv in c[:length]] for c in per_run]) if length else np.empty((0, 0))
            result[name] = pd.DataFrame(
                {
                    "eval": evals,
                    "hv_mean": values.mean(axis=0) if length else [],
                    "hv_sd": values.std(axis=0, ddof=1) if length and len(per_run) > 1 else np.zeros(length),
                }
            )
        return result


def delta_table(summary: pd.DataFrame, base: str, metrics: Sequence[str] = SUMMARY_METRICS) -> pd.DataFrame:
    """
    Add delta_<metric> = base value - variant value, per problem.

    Raises:
        UsageError: a problem has no row for the base configuration
    """
    parts = []
    for problem, group in summary.groupby("problem", sort=False):
        base_rows = group[group["variant"] == base]
        if base_rows.empty:
            raise UsageError(f"Base configuration '{base}' missing for {problem}; deltas need it")
        group = group.copy()
        for metric in metrics:
            group[f"delta_{metric}"] = float(base_rows.iloc[0][metric]) - group[metric].astype(float)
        parts.append(group)
    return pd.concat(parts, ignore_index=True) if parts else summary.copy()


def correlation_table(summary: pd.DataFrame, metrics: Sequence[str] = CORRELATED_METRICS) -> pd.DataFrame:
    """Spearman correlations among per-configuration metrics, one block per problem"""
    blocks = []
    for problem, group in summary.groupby("problem", sort=False):
        matrix = metric_correlations(group, metrics)
        matrix.insert(0, "metric", matrix.index)
        matrix.insert(0, "problem", problem)
        blocks.append(matrix.reset_index(drop=True))
    if not blocks:
        return pd.DataFrame(columns=["problem", "metric", *metrics])
    return pd.concat(blocks, ignore_index=True)
