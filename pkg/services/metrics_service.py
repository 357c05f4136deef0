"""Objective- and decision-space performance metrics.

Hypervolume is exact for two objectives (sweep) and three objectives (slicing
along the third objective); from four objectives on it is estimated by Monte
Carlo sampling and reported with its standard error.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from .core import ParetoSet, UsageError, nondominated_mask
from .engine import ExternalArchive
from .problems import ProblemSpec, objective_bounds, scale_with
from .runlog import RunLog, RunLogRecord

logger = logging.getLogger(__name__)

DEFAULT_REF = 1.1
MC_SAMPLES = 1_000_000
MC_CHUNK = 50_000
PF_EPSILON = 1e-3
PF_ORACLE_SAMPLES = 5001


def reference_point(m: int, value: float = DEFAULT_REF) -> np.ndarray:
    return np.full(m, float(value))


# ---------------------------------------------------------------------------
# Hypervolume
# ---------------------------------------------------------------------------


def _prepare(front, ref) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=float)
    F = np.asarray(front, dtype=float)
    if F.size == 0:
        return np.empty((0, len(ref))), ref
    F = np.atleast_2d(F)
    if F.shape[1] != len(ref):
        raise UsageError(f"Front has {F.shape[1]} objectives, reference point has {len(ref)}")
    F = F[np.all(F < ref, axis=1)]
    if len(F):
        F = F[nondominated_mask(F)]
    return F, ref


def _hv2d(F: np.ndarray, ref: np.ndarray) -> float:
    if len(F) == 0:
        return 0.0
    F = F[np.argsort(F[:, 0], kind="stable")]
    x_next = np.append(F[1:, 0], ref[0])
    return float(np.sum((x_next - F[:, 0]) * (ref[1] - F[:, 1])))


def _hv3d(F: np.ndarray, ref: np.ndarray) -> float:
    if len(F) == 0:
        return 0.0
    F = F[np.argsort(F[:, 2], kind="stable")]
    levels = np.append(F[:, 2], ref[2])
    volume = 0.0
    for k in range(len(F)):
        depth = levels[k + 1] - levels[k]
        if depth <= 0:
            continue
        slab = F[: k + 1, :2]
        slab = slab[nondominated_mask(slab)]
        volume += _hv2d(slab, ref[:2]) * depth
    return volume


def hypervolume_mc(
    front, ref, samples: int = MC_SAMPLES, rng: Optional[np.random.Generator] = None
) -> tuple[float, float]:
    """Monte Carlo estimate and its standard error"""
    F, ref = _prepare(front, ref)
    if len(F) == 0:
        return 0.0, 0.0
    rng = rng or np.random.default_rng(0)
    lower = F.min(axis=0)
    box = float(np.prod(ref - lower))
    hits = 0
    remaining = samples
    while remaining > 0:
        n = min(MC_CHUNK, remaining)
        points = rng.uniform(lower, ref, size=(n, len(ref)))
        dominated = np.zeros(n, dtype=bool)
        for f in F:
            dominated |= np.all(points >= f, axis=1)
        hits += int(dominated.sum())
        remaining -= n
    p = hits / samples
    return box * p, box * np.sqrt(p * (1 - p) / samples)


def hypervolume_with_error(front, ref, samples: int = MC_SAMPLES, rng=None) -> tuple[float, float]:
    """(hv, standard error); the error is 0 for the exact two- and three-objective cases"""
    F, ref = _prepare(front, ref)
    m = len(ref)
    if m == 2:
        return _hv2d(F, ref), 0.0
    if m == 3:
        return _hv3d(F, ref), 0.0
    return hypervolume_mc(F, ref, samples, rng)


def hypervolume(front, ref) -> float:
    """
    Hypervolume dominated by front and bounded by ref (minimization). Points not
    strictly better than ref in every objective contribute nothing and are dropped.
    """
    return hypervolume_with_error(front, ref)[0]


def hv_ratio(hv: float, m: int, ref_value: float = DEFAULT_REF) -> float:
    """hv relative to the volume of the whole [0, ref]^m box"""
    return hv / ref_value**m


# ---------------------------------------------------------------------------
# Anytime hypervolume
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnytimeCurve:
    checkpoints: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    @property
    def auc(self) -> float:
        return float(sum(hv for _, hv in self.checkpoints))

    @property
    def final(self) -> float:
        return self.checkpoints[-1][1] if self.checkpoints else 0.0


def replay_archive(records: Iterable[RunLogRecord], until: Optional[int] = None) -> ExternalArchive:
    """Rebuild the external archive from its insertion records up to an evaluation index"""
    archive: Optional[ExternalArchive] = None
    for record in records:
        if not record.is_archive:
            continue
        if until is not None and record.eval_index > until:
            break
        if archive is None:
            archive = ExternalArchive(len(record.f))
        archive.insert(record.to_solution())
    return archive


def feasible_front(log: RunLog, until: Optional[int] = None) -> np.ndarray:
    """Feasible archive objectives at an evaluation index (empty when none)"""
    archive = replay_archive(log.records, until)
    if archive is None or not archive.has_feasible:
        return np.empty((0, 0))
    return archive.F.copy()


def anytime_hv(
    log: RunLog,
    ref=DEFAULT_REF,
    checkpoint: int = 1000,
    budget: Optional[int] = None,
    bounds: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> AnytimeCurve:
    """
    HV of the feasible archive at every checkpoint evaluation. Objectives are scaled
    with the given bounds or, by default, with the bounds of the final archive.
    """
    budget = budget or log.final_eval()
    marks = list(range(checkpoint, budget + 1, checkpoint))
    records = [r for r in log.archive_records()]
    if not marks or not records:
        return AnytimeCurve(tuple((e, 0.0) for e in marks))

    m = len(records[0].f)
    ref = reference_point(m, ref) if np.isscalar(ref) else np.asarray(ref, dtype=float)
    if bounds is None:
        final = feasible_front(log)
        if final.size == 0:
            return AnytimeCurve(tuple((e, 0.0) for e in marks))
        bounds = objective_bounds(final)

    archive = ExternalArchive(m)
    points = []
    position = 0
    for e in marks:
        while position < len(records) and records[position].eval_index <= e:
            archive.insert(records[position].to_solution())
            position += 1
        if archive.has_feasible and len(archive):
            hv = hypervolume(scale_with(archive.F, *bounds), ref)
        else:
            hv = 0.0
        points.append((e, hv))
    return AnytimeCurve(tuple(points))


# ---------------------------------------------------------------------------
# Decision-space and front-membership metrics
# ---------------------------------------------------------------------------


def population_variance(X, bounds) -> float:
    """Mean over dimensions of the sample variance of bound-normalized variables"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        return 0.0
    lower, upper = (np.asarray(b, dtype=float) for b in bounds)
    normalized = (X - lower) / (upper - lower)
    return float(np.mean(np.var(normalized, axis=0, ddof=1)))


def _distance_to_polyline(P: np.ndarray, curve: np.ndarray, chunk: int = 256) -> np.ndarray:
    A = curve[:-1]
    D = curve[1:] - A
    lengths = np.maximum(np.sum(D**2, axis=1), 1e-300)
    result = np.empty(len(P))
    for start in range(0, len(P), chunk):
        block = P[start : start + chunk]
        rel = block[:, None, :] - A[None, :, :]
        t = np.clip(np.sum(rel * D[None, :, :], axis=2) / lengths, 0.0, 1.0)
        nearest = A[None, :, :] + t[..., None] * D[None, :, :]
        result[start : start + chunk] = np.min(np.linalg.norm(block[:, None, :] - nearest, axis=2), axis=1)
    return result


def _distance_to_samples(P: np.ndarray, samples: np.ndarray, chunk: int = 256) -> np.ndarray:
    result = np.empty(len(P))
    for start in range(0, len(P), chunk):
        block = P[start : start + chunk]
        result[start : start + chunk] = np.min(
            np.linalg.norm(block[:, None, :] - samples[None, :, :], axis=2), axis=1
        )
    return result


class ParetoReference:
    """
    What an objective vector is compared against to decide Pareto-front membership:
    the analytic front when the problem has one, otherwise the nondominated points
    of a pool of archives.
    """

    def __init__(self, problem: ProblemSpec, pool: Optional[Sequence[np.ndarray]] = None, epsilon: float = PF_EPSILON):
        self.problem = problem
        self.epsilon = epsilon
        self.front = None
        self.best = None
        if problem.pf_oracle is not None:
            front = problem.pf_oracle(PF_ORACLE_SAMPLES)
            self.lower, self.upper = objective_bounds(front)
            scaled = scale_with(front, self.lower, self.upper)
            self.front = scaled[np.argsort(scaled[:, 0], kind="stable")] if problem.m == 2 else scaled
        else:
            fronts = [np.atleast_2d(p) for p in (pool or []) if np.size(p)]
            if not fronts:
                raise UsageError(f"{problem.name} has no analytic front; a pool of archives is required")
            pooled = np.vstack(fronts)
            self.best = pooled[nondominated_mask(pooled)]

    def contains(self, F) -> np.ndarray:
        """Boolean mask over the rows of F"""
        F = np.atleast_2d(np.asarray(F, dtype=float))
        if F.size == 0:
            return np.zeros(0, dtype=bool)
        if self.front is not None:
            scaled = scale_with(F, self.lower, self.upper)
            if self.problem.m == 2:
                distance = _distance_to_polyline(scaled, self.front)
            else:
                distance = _distance_to_samples(scaled, self.front)
            return distance <= self.epsilon
        best = self.best
        return np.array(
            [not np.any(np.all(best <= f, axis=1) & np.any(best < f, axis=1)) for f in F], dtype=bool
        )


def count_pf(
    archive: ParetoSet | np.ndarray,
    problem: ProblemSpec,
    pool: Optional[Sequence[np.ndarray]] = None,
    epsilon: float = PF_EPSILON,
) -> int:
    """
    Archive members on the Pareto front. With an analytic front: members within
    epsilon (Euclidean, objectives scaled by the front's own range) of it. Otherwise:
    members not dominated by any point of the pooled archives.

    Raises:
        UsageError: no analytic front and no pool
    """
    F = archive.objectives() if isinstance(archive, ParetoSet) else np.asarray(archive, dtype=float)
    reference = ParetoReference(problem, pool, epsilon)
    if F.size == 0:
        return 0
    return int(np.sum(reference.contains(F)))


def metric_correlations(table: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    """Spearman rank correlation among metric columns (constant columns yield NaN)"""
    return table[list(columns)].astype(float).corr(method="spearman")
