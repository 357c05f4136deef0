"""Domain types shared by every module: solutions, algorithm configurations,
Pareto dominance and nondominated filtering."""

import logging
import math
from dataclasses import dataclass, field
from typing import Annotated, Iterable, Literal, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

logger = logging.getLogger(__name__)


class MoeadError(Exception):
    """Base exception for the framework"""

    pass


class UsageError(MoeadError):
    """Raised for invalid input, configuration or unmet preconditions"""

    pass


class RunError(MoeadError):
    """Raised when a run or a worker fails at runtime"""

    pass


@dataclass(frozen=True, eq=False)
class Solution:
    """
    One evaluated point.

    Attributes:
        x: decision vector, problem-native scale
        f: raw objective vector (minimization)
        v: total constraint violation, 0 means feasible
        eval_index: global evaluation counter at creation
        run_id: owning run
        f_scaled: objectives scaled into [0, 1] for the iteration that produced them
    """

    x: np.ndarray
    f: np.ndarray
    v: float = 0.0
    eval_index: int = 0
    run_id: int = 0
    f_scaled: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.v < 0:
            raise UsageError(f"Constraint violation must be nonnegative, got {self.v}")
        for name in ("x", "f", "f_scaled"):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.array(value, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def feasible(self) -> bool:
        return self.v == 0.0

    def __repr__(self):
        return (
            f"<Solution(eval={self.eval_index}, run={self.run_id}, "
            f"f={np.round(self.f, 4).tolist()}, v={self.v:.4g})>"
        )


@dataclass(frozen=True)
class ParetoSet:
    """Mutually nondominated solutions, ordered by eval_index"""

    members: tuple[Solution, ...] = ()

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def objectives(self) -> np.ndarray:
        if not self.members:
            return np.empty((0, 0))
        return np.vstack([s.f for s in self.members])


# ---------------------------------------------------------------------------
# Algorithm configuration (component space)
# ---------------------------------------------------------------------------


class _Component(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class BestUpdate(_Component):
    kind: Literal["best"] = "best"
    nr: int = Field(ge=1, le=20)


class RestrictedUpdate(_Component):
    kind: Literal["restricted"] = "restricted"
    nr: int = Field(ge=1, le=20)
    tr: int = Field(ge=4, le=20)


class NoPartialUpdate(_Component):
    kind: Literal["off"] = "off"


class PartialUpdate(_Component):
    kind: Literal["partial"] = "partial"
    frac: float = Field(gt=0.0, le=1.0)


class NoRestart(_Component):
    kind: Literal["off"] = "off"


class RestartEvery(_Component):
    kind: Literal["every"] = "every"
    evals: int = Field(gt=0)


UpdateStrategy = Annotated[Union[BestUpdate, RestrictedUpdate], Field(discriminator="kind")]
ResourceAllocation = Annotated[Union[NoPartialUpdate, PartialUpdate], Field(discriminator="kind")]
RestartStrategy = Annotated[Union[NoRestart, RestartEvery], Field(discriminator="kind")]

# Flat parameter names in file order; conditional ones appear only when active.
FLAT_FIELDS = (
    "decomp",
    "pop_size",
    "aggregation",
    "update",
    "nr",
    "tr",
    "T",
    "delta",
    "de_F",
    "pm_eta",
    "pm_prob",
    "ra",
    "ra_frac",
    "restart",
    "restart_evals",
    "budget",
    "seed",
)


class AlgoConfig(BaseModel):
    """
    One point of the component space; fully determines an algorithm instance.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    decomp: Literal["sld", "sobol"]
    pop_size: int = Field(gt=0)
    aggregation: Literal["wt", "awt"]
    update: UpdateStrategy
    T: int = Field(ge=10, le=100)
    delta: float = Field(ge=0.1, le=1.0)
    de_F: float = Field(ge=0.1, le=1.0)
    pm_eta: float = Field(ge=1.0, le=100.0)
    pm_prob: float = Field(ge=0.0, le=1.0)
    ra: ResourceAllocation = NoPartialUpdate()
    restart: RestartStrategy = NoRestart()
    budget: int = Field(default=100000, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_neighborhoods(self):
        if self.T > self.pop_size:
            raise ValueError(f"T ({self.T}) must not exceed pop_size ({self.pop_size})")
        if isinstance(self.update, RestrictedUpdate) and self.update.tr > self.T:
            raise ValueError(f"Tr ({self.update.tr}) must not exceed T ({self.T})")
        return self

    def to_flat(self) -> dict:
        """Flatten into the parameter-name view used by files and the tuner"""
        flat = {
            "decomp": self.decomp,
            "pop_size": self.pop_size,
            "aggregation": self.aggregation,
            "update": self.update.kind,
            "nr": self.update.nr,
        }
        if isinstance(self.update, RestrictedUpdate):
            flat["tr"] = self.update.tr
        flat.update(
            T=self.T,
            delta=self.delta,
            de_F=self.de_F,
            pm_eta=self.pm_eta,
            pm_prob=self.pm_prob,
            ra=self.ra.kind,
        )
        if isinstance(self.ra, PartialUpdate):
            flat["ra_frac"] = self.ra.frac
        flat["restart"] = self.restart.kind
        if isinstance(self.restart, RestartEvery):
            flat["restart_evals"] = self.restart.evals
        flat["budget"] = self.budget
        flat["seed"] = self.seed
        return flat

    @classmethod
    def from_flat(cls, flat: dict) -> "AlgoConfig":
        """
        Build from the flat view. Values may be strings (as read from files).

        Raises:
            UsageError: unknown keys or out-of-domain values
        """
        unknown = set(flat) - set(FLAT_FIELDS)
        if unknown:
            raise UsageError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
        data = dict(flat)
        try:
            update = {"kind": data.pop("update", None), "nr": data.pop("nr", None)}
            tr = data.pop("tr", None)
            if update["kind"] == "restricted":
                update["tr"] = tr
            ra = {"kind": data.pop("ra", "off")}
            frac = data.pop("ra_frac", None)
            if ra["kind"] == "partial":
                ra["frac"] = frac
            restart = {"kind": data.pop("restart", "off")}
            evals = data.pop("restart_evals", None)
            if restart["kind"] == "every":
                restart["evals"] = evals
            return cls.model_validate({**data, "update": update, "ra": ra, "restart": restart})
        except ValidationError as e:
            raise UsageError(_describe_validation_error(e)) from e

    def replace(self, **changes) -> "AlgoConfig":
        """Return a validated copy with flat-view changes applied"""
        flat = self.to_flat()
        flat.update(changes)
        return AlgoConfig.from_flat({k: v for k, v in flat.items() if v is not None})


def _describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


# ---------------------------------------------------------------------------
# Dominance
# ---------------------------------------------------------------------------


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """
    Pareto dominance for minimization: a <= b everywhere and a != b.

    Raises:
        UsageError: vectors of different lengths
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise UsageError(f"Objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_mask(F: np.ndarray) -> np.ndarray:
    """
    Boolean mask of rows not dominated by any other row.
    Among identical rows only the first one is kept.
    """
    F = np.asarray(F, dtype=float)
    n = F.shape[0]
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        others = F[keep]
        le = np.all(others <= F[i], axis=1)
        lt = np.any(others < F[i], axis=1)
        if np.any(le & lt):
            keep[i] = False
            continue
        # i survives: drop everything it dominates plus later duplicates
        dominated = np.all(F[i] <= F, axis=1) & np.any(F[i] < F, axis=1)
        duplicates = np.all(F == F[i], axis=1)
        duplicates[: i + 1] = False
        keep &= ~(dominated | duplicates)
    return keep


def nondominated_filter(points: Iterable[Solution]) -> ParetoSet:
    """
    Subset of points not dominated by any member. Identical objective
    vectors keep the earliest eval_index.
    """
    points = sorted(points, key=lambda s: s.eval_index)
    if not points:
        return ParetoSet()
    F = np.vstack([s.f for s in points])
    mask = nondominated_mask(F)
    return ParetoSet(tuple(p for p, k in zip(points, mask) if k))


def archive_mask(F: np.ndarray, V: np.ndarray) -> np.ndarray:
    """
    Rows an archive keeps under the constrained rule: nondominated feasible rows
    when any row is feasible, otherwise nondominated rows of minimal violation.
    """
    F = np.asarray(F, dtype=float)
    V = np.asarray(V, dtype=float)
    mask = np.zeros(len(V), dtype=bool)
    if len(V) == 0:
        return mask
    feasible = V == 0.0
    pool = feasible if feasible.any() else V == V.min()
    idx = np.flatnonzero(pool)
    mask[idx[nondominated_mask(F[idx])]] = True
    return mask


def constrained_filter(points: Iterable[Solution]) -> ParetoSet:
    """nondominated_filter under the archive rule (feasible solutions first)"""
    points = sorted(points, key=lambda s: s.eval_index)
    if not points:
        return ParetoSet()
    mask = archive_mask(np.vstack([s.f for s in points]), np.array([s.v for s in points]))
    return ParetoSet(tuple(p for p, k in zip(points, mask) if k))


def ceil_fraction(frac: float, n: int) -> int:
    """Number of subproblems updated by a partial update of frac over n"""
    return max(1, min(n, math.ceil(round(frac * n, 9))))
