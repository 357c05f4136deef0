"""The generational MOEA/D loop.

One generation: choose the subproblems to update (all of them, or a uniform
random subset under the partial update), build one candidate per chosen
subproblem, evaluate the batch, rescale objectives over population, archive
and batch, replace incumbents with the configured update strategy, feed the
batch to the unbounded external archive (UEA), then apply the restart check.
Neighborhoods are static for fixed weights and are computed once.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    AlgoConfig,
    ParetoSet,
    PartialUpdate,
    RestartEvery,
    RestrictedUpdate,
    Solution,
    UsageError,
    ceil_fraction,
    nondominated_mask,
)
from .decomposition import SOBOL_GENERATOR, SOBOL_SIMPLEX_MAP, WeightSet, build_weights
from .operators import DE_VARIANT, REPAIR_RULE, VariationParams, make_candidate
from .problems import ProblemSpec, evaluate, objective_bounds, scale_with, total_violation
from .runlog import ARCHIVE_SENTINEL, RunLog, RunLogRecord
from .scalarization import DEFAULT_PENALTY, IdealPoint, PenaltySchedule, get_aggregation, penalized, scaled_ideal

logger = logging.getLogger(__name__)


@dataclass
class Population:
    """One solution per subproblem, stored column-wise"""

    X: np.ndarray
    F: np.ndarray
    V: np.ndarray
    E: np.ndarray

    def __len__(self):
        return len(self.V)

    def copy(self) -> "Population":
        return Population(self.X.copy(), self.F.copy(), self.V.copy(), self.E.copy())

    def replace(self, k: int, candidate: "Candidate") -> None:
        self.X[k] = candidate.x
        self.F[k] = candidate.f
        self.V[k] = candidate.v
        self.E[k] = candidate.eval_index

    def solution(self, k: int, run_id: int = 0) -> Solution:
        return Solution(x=self.X[k], f=self.F[k], v=float(self.V[k]), eval_index=int(self.E[k]), run_id=run_id)


@dataclass(frozen=True, eq=False)
class Candidate:
    x: np.ndarray
    f: np.ndarray
    v: float
    eval_index: int


class ExternalArchive:
    """
    Unbounded archive of nondominated solutions. Once a feasible solution is
    known only feasible ones are kept; before that, the nondominated solutions
    of minimal violation. Identical objective vectors keep the earliest entry.
    """

    def __init__(self, m: int):
        self.F = np.empty((0, m))
        self.members: list[Solution] = []
        self.min_violation = np.inf

    def __len__(self):
        return len(self.members)

    @property
    def has_feasible(self) -> bool:
        return self.min_violation == 0.0

    def insert(self, solution: Solution) -> bool:
        """Try one solution; returns True when it entered the archive"""
        v = solution.v
        if v > self.min_violation:
            return False
        if v < self.min_violation:
            self.F = self.F[:0]
            self.members = []
            self.min_violation = v
        f = solution.f
        if len(self.members):
            weakly_better = np.all(self.F <= f, axis=1)
            if weakly_better.any():
                return False
            dominated = np.all(f <= self.F, axis=1)
            if dominated.any():
                keep = ~dominated
                self.F = self.F[keep]
                self.members = [s for s, k in zip(self.members, keep) if k]
        self.F = np.vstack([self.F, f])
        self.members.append(solution)
        return True

    def to_pareto_set(self) -> ParetoSet:
        return ParetoSet(tuple(sorted(self.members, key=lambda s: s.eval_index)))


@dataclass
class RunState:
    population: Population
    weights: WeightSet
    ideal: IdealPoint
    archive: ExternalArchive
    rng: np.random.Generator
    eval_count: int = 0
    generation: int = 0
    restarts: int = 0
    next_restart: int | None = None


@dataclass
class RunResult:
    log: RunLog
    archive: ParetoSet
    final_population: tuple[RunLogRecord, ...]
    evaluations: int
    generations: int
    restarts: int
    switches: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Update strategies
# ---------------------------------------------------------------------------


def improvements(
    candidate: Candidate,
    population: Population,
    weights: WeightSet,
    z: np.ndarray,
    t: int,
    scale: tuple[np.ndarray, np.ndarray],
    aggregation: str = "wt",
    sched: PenaltySchedule = DEFAULT_PENALTY,
) -> np.ndarray:
    """Penalized-aggregation gain the candidate yields on every subproblem"""
    agg = get_aggregation(aggregation)
    lower, upper = scale
    z_scaled = scaled_ideal(z, scale)
    f_new = scale_with(candidate.f, lower, upper)[0]
    F_old = scale_with(population.F, lower, upper)
    g_new = penalized(agg(f_new, weights.vectors, z_scaled), t, candidate.v, sched)
    g_old = penalized(agg(F_old, weights.vectors, z_scaled), t, population.V, sched)
    return np.atleast_1d(g_old - g_new)


def _replace_top(candidate, population, eligible: np.ndarray, gain: np.ndarray, nr: int) -> np.ndarray:
    gain = gain[eligible]
    better = gain > 0
    eligible, gain = eligible[better], gain[better]
    order = np.lexsort((eligible, -gain))
    chosen = eligible[order[:nr]]
    for k in chosen:
        population.replace(int(k), candidate)
    return chosen


def update_best(candidate, population, weights, z, nr, t, scale, aggregation="wt", sched=DEFAULT_PENALTY):
    """
    Replace (in place) the incumbents of the up-to-nr subproblems with the largest
    strict improvement. Returns the replaced subproblem indices.
    """
    if nr < 1:
        raise UsageError(f"nr must be at least 1, got {nr}")
    gain = improvements(candidate, population, weights, z, t, scale, aggregation, sched)
    return _replace_top(candidate, population, np.arange(len(population)), gain, nr)


def update_restricted(candidate, i, population, weights, z, nr, tr, t, scale, aggregation="wt", sched=DEFAULT_PENALTY):
    """As update_best, limited to the tr nearest neighbors of origin subproblem i"""
    if tr > weights.T:
        raise UsageError(f"Tr ({tr}) must not exceed T ({weights.T})")
    gain = improvements(candidate, population, weights, z, t, scale, aggregation, sched)
    return _replace_top(candidate, population, np.asarray(weights.neighborhoods[i][:tr]), gain, nr)


# ---------------------------------------------------------------------------
# Run
# ---------------------------------------------------------------------------


class MoeadRun:
    """
    A single seeded run of one configuration on one problem.

    Population fronts are logged every generation unless snapshot_evals is
    given, in which case one snapshot per that many evaluations is kept (the
    first and last generations always are).
    """

    def __init__(
        self,
        config: AlgoConfig,
        problem: ProblemSpec,
        run_id: int = 0,
        snapshot_evals: int | None = None,
        sched: PenaltySchedule = DEFAULT_PENALTY,
    ):
        if config.budget < config.pop_size:
            raise UsageError(
                f"Budget {config.budget} cannot cover the initial population of {config.pop_size}"
            )
        if config.pop_size < 3:
            raise UsageError("DE mutation needs a population of at least 3")
        self.config = config
        self.problem = problem
        self.run_id = run_id
        self.snapshot_evals = snapshot_evals
        self.sched = sched
        self.params = VariationParams.from_config(config)
        self.records: list[RunLogRecord] = []
        self._last_snapshot_eval = 0
        self._last_snapshot_gen = -1

    @property
    def switches(self) -> dict:
        return {
            "scaling": "population+archive+offspring",
            "repair": REPAIR_RULE,
            "de": DE_VARIANT.replace(" ", "-"),
            "sobol": SOBOL_GENERATOR.replace(" ", ""),
            "sobol_map": SOBOL_SIMPLEX_MAP,
            "partial_update": "uniform",
            "neighborhoods": "static",
            "archive": "feasible-first",
            "snapshot": f"every-{self.snapshot_evals}-evals" if self.snapshot_evals else "every-generation",
        }

    # -- evaluation -----------------------------------------------------

    def _evaluate(self, state: RunState, x: np.ndarray) -> Candidate:
        f, g = evaluate(self.problem, x)
        state.eval_count += 1
        return Candidate(x=np.asarray(x, dtype=float), f=f, v=total_violation(g), eval_index=state.eval_count)

    def _sample_population(self, state: RunState) -> Population:
        lower, upper = self.problem.bounds
        n = self.config.pop_size
        X = state.rng.uniform(lower, upper, size=(n, self.problem.dim))
        batch = [self._evaluate(state, x) for x in X]
        return Population(
            X=X,
            F=np.vstack([c.f for c in batch]),
            V=np.array([c.v for c in batch]),
            E=np.array([c.eval_index for c in batch]),
        )

    def _archive_batch(self, state: RunState, batch: list[Candidate]) -> list[Solution]:
        inserted = []
        for c in batch:
            solution = Solution(x=c.x, f=c.f, v=c.v, eval_index=c.eval_index, run_id=self.run_id)
            if state.archive.insert(solution):
                inserted.append(solution)
        return inserted

    # -- logging --------------------------------------------------------

    def _log_archive(self, state: RunState, inserted: list[Solution]) -> None:
        for s in inserted:
            self.records.append(
                RunLogRecord.from_solution(s, state.generation, state.eval_count, ARCHIVE_SENTINEL)
            )

    def _log_front(self, state: RunState) -> None:
        pop = state.population
        for group in (pop.V == 0.0, pop.V > 0.0):
            idx = np.flatnonzero(group)
            if len(idx) == 0:
                continue
            for k in idx[nondominated_mask(pop.F[idx])]:
                self.records.append(
                    RunLogRecord.from_solution(
                        pop.solution(int(k), self.run_id), state.generation, state.eval_count, int(k)
                    )
                )
        self._last_snapshot_eval = state.eval_count
        self._last_snapshot_gen = state.generation

    # -- generation steps -----------------------------------------------

    def _select_subproblems(self, state: RunState) -> np.ndarray:
        n = self.config.pop_size
        if isinstance(self.config.ra, PartialUpdate):
            size = ceil_fraction(self.config.ra.frac, n)
            return np.sort(state.rng.choice(n, size=size, replace=False))
        return np.arange(n)

    def restart_population(self, state: RunState) -> RunState:
        """
        Regenerate the population when the evaluation counter has crossed the
        next multiple of the restart period. Archive, ideal point and weights
        are kept. Near the end of the budget only as many members as there are
        evaluations left are re-sampled, picked at random.
        """
        if not isinstance(self.config.restart, RestartEvery):
            return state
        period = self.config.restart.evals
        left = self.config.budget - state.eval_count
        if state.eval_count < state.next_restart or left <= 0:
            return state
        logger.info(
            f"Run {self.run_id}: restart at {state.eval_count} evaluations (generation {state.generation})"
        )
        n = len(state.population)
        if left >= n:
            state.population = self._sample_population(state)
            members = np.arange(n)
        else:
            members = np.sort(state.rng.choice(n, size=left, replace=False))
            lower, upper = self.problem.bounds
            X = state.rng.uniform(lower, upper, size=(left, self.problem.dim))
            for k, x in zip(members, X):
                state.population.replace(int(k), self._evaluate(state, x))
            logger.info(f"Run {self.run_id}: restart clamped to {left} members by the budget")
        pop = state.population
        state.ideal.update(pop.F[members])
        batch = [Candidate(pop.X[k], pop.F[k], float(pop.V[k]), int(pop.E[k])) for k in members]
        self._log_archive(state, self._archive_batch(state, batch))
        state.restarts += 1
        state.next_restart = (state.eval_count // period + 1) * period
        return state

    def _generation(self, state: RunState) -> None:
        config = self.config
        state.generation += 1
        t = state.generation
        bounds = self.problem.bounds

        selected = self._select_subproblems(state)
        trial = [
            make_candidate(state.population.X, int(i), state.weights, self.params, bounds, state.rng)
            for i in selected
        ]
        batch = [self._evaluate(state, x) for x in trial]

        reference = np.vstack([state.population.F, state.archive.F, *[c.f for c in batch]])
        scale = objective_bounds(reference)
        state.ideal.update(np.vstack([c.f for c in batch]))

        for i, candidate in zip(selected, batch):
            if isinstance(config.update, RestrictedUpdate):
                update_restricted(
                    candidate, int(i), state.population, state.weights, state.ideal.z,
                    config.update.nr, config.update.tr, t, scale, config.aggregation, self.sched,
                )
            else:
                update_best(
                    candidate, state.population, state.weights, state.ideal.z,
                    config.update.nr, t, scale, config.aggregation, self.sched,
                )

        self._log_archive(state, self._archive_batch(state, batch))
        self.restart_population(state)

        due = (
            self.snapshot_evals is None
            or state.eval_count - self._last_snapshot_eval >= self.snapshot_evals
        )
        if due or state.eval_count >= config.budget:
            self._log_front(state)
        logger.debug(
            f"Run {self.run_id} gen {t}: evals={state.eval_count} archive={len(state.archive)}"
        )

    def initial_state(self) -> RunState:
        config = self.config
        rng = np.random.default_rng(config.seed)
        weights = build_weights(config, self.problem.m)
        state = RunState(
            population=Population(np.empty(0), np.empty(0), np.empty(0), np.empty(0)),
            weights=weights,
            ideal=IdealPoint(np.full(self.problem.m, np.inf)),
            archive=ExternalArchive(self.problem.m),
            rng=rng,
        )
        if isinstance(config.restart, RestartEvery):
            state.next_restart = config.restart.evals
        state.population = self._sample_population(state)
        state.ideal.update(state.population.F)
        batch = [
            Candidate(state.population.X[k], state.population.F[k], float(state.population.V[k]), int(state.population.E[k]))
            for k in range(len(state.population))
        ]
        self._log_archive(state, self._archive_batch(state, batch))
        self._log_front(state)
        return state

    def execute(self, on_generation: Callable[[RunState], None] | None = None) -> RunResult:
        config = self.config
        logger.info(
            f"Run {self.run_id}: {self.problem.name}, budget={config.budget}, "
            f"pop={config.pop_size}, seed={config.seed}"
        )
        self.records = []
        state = self.initial_state()
        while state.eval_count < config.budget:
            self._generation(state)
            if on_generation is not None:
                on_generation(state)
        if self._last_snapshot_gen != state.generation:
            self._log_front(state)

        final_population = tuple(
            RunLogRecord.from_solution(
                state.population.solution(k, self.run_id), state.generation, state.eval_count, k
            )
            for k in range(len(state.population))
        )
        logger.info(
            f"Run {self.run_id} finished: {state.eval_count} evaluations, {state.generation} generations, "
            f"{state.restarts} restarts, archive size {len(state.archive)}"
        )
        return RunResult(
            log=RunLog(tuple(self.records)),
            archive=state.archive.to_pareto_set(),
            final_population=final_population,
            evaluations=state.eval_count,
            generations=state.generation,
            restarts=state.restarts,
            switches=self.switches,
        )


def run(config: AlgoConfig, problem: ProblemSpec, run_id: int = 0, snapshot_evals: int | None = None) -> RunResult:
    """Execute one configuration on one problem"""
    return MoeadRun(config, problem, run_id=run_id, snapshot_evals=snapshot_evals).execute()
