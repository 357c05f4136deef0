"""Constrained multiobjective test problems.

Every problem follows one contract: objectives are minimized and constraints
use the g_i(x) <= 0 feasible convention. Built-ins:

- zdt1: 30 variables in [0, 1], unconstrained, convex front f2 = 1 - sqrt(f1)
- binh_korn: x in [0, 5], y in [0, 3], two constraints
- tanaka: x in [0, pi]^2, two constraints, disconnected feasible front

User problems are added with register_problem().
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import UsageError

logger = logging.getLogger(__name__)

EvaluateFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
FrontSampler = Callable[[int], np.ndarray]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """
    Attributes:
        name: registry name
        dim: number of decision variables
        m: number of objectives
        bounds: (lower, upper) arrays of length dim
        n_constraints: number of g_i
        function: x -> (f, g)
        pf_oracle: n -> (n, m) samples of the analytic Pareto front
        reference_bounds: (ideal, nadir) used to scale objectives when runs
            of different algorithms must be compared on one scale
    """

    name: str
    dim: int
    m: int
    bounds: tuple[np.ndarray, np.ndarray]
    n_constraints: int
    function: EvaluateFn = field(repr=False)
    pf_oracle: Optional[FrontSampler] = field(default=None, repr=False)
    reference_bounds: Optional[tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        lower = np.asarray(self.bounds[0], dtype=float)
        upper = np.asarray(self.bounds[1], dtype=float)
        if lower.shape != (self.dim,) or upper.shape != (self.dim,):
            raise UsageError(f"{self.name}: bounds must have length {self.dim}")
        if np.any(lower >= upper):
            raise UsageError(f"{self.name}: every lower bound must be below its upper bound")
        if self.m < 2:
            raise UsageError(f"{self.name}: at least two objectives required, got {self.m}")
        object.__setattr__(self, "bounds", (lower, upper))

    @property
    def lower(self) -> np.ndarray:
        return self.bounds[0]

    @property
    def upper(self) -> np.ndarray:
        return self.bounds[1]


def evaluate(problem: ProblemSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate raw objectives and constraint values.

    Raises:
        UsageError: wrong length or x outside the bounds
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dim,):
        raise UsageError(f"{problem.name}: expected {problem.dim} variables, got {x.shape}")
    if np.any(x < problem.lower) or np.any(x > problem.upper):
        raise UsageError(f"{problem.name}: decision vector outside bounds, repair before evaluating")
    f, g = problem.function(x)
    return np.asarray(f, dtype=float), np.asarray(g, dtype=float).reshape(-1)


def total_violation(g) -> float:
    """Sum of positive constraint values"""
    g = np.asarray(g, dtype=float)
    return float(np.sum(np.maximum(g, 0.0)))


def objective_bounds(points) -> tuple[np.ndarray, np.ndarray]:
    F = np.atleast_2d(np.asarray(points, dtype=float))
    return F.min(axis=0), F.max(axis=0)


def scale_with(points, lower, upper) -> np.ndarray:
    """Affine map of objectives with the given bounds; degenerate ranges map to 0"""
    F = np.atleast_2d(np.asarray(points, dtype=float))
    span = np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float)
    safe = np.where(span > 0, span, 1.0)
    scaled = (F - lower) / safe
    return np.where(span > 0, scaled, 0.0)


def scale_objectives(points) -> np.ndarray:
    """Scale each objective to [0, 1] using the min/max of the input set"""
    lower, upper = objective_bounds(points)
    return scale_with(points, lower, upper)


# ---------------------------------------------------------------------------
# Built-in problems
# ---------------------------------------------------------------------------


def _zdt1(x: np.ndarray):
    n = len(x)
    f1 = x[0]
    g = 1 + 9 * np.sum(x[1:]) / (n - 1)
    f2 = g * (1 - np.sqrt(f1 / g))
    return np.array([f1, f2]), np.empty(0)


def _zdt1_front(n: int) -> np.ndarray:
    f1 = np.linspace(0.0, 1.0, n)
    return np.column_stack([f1, 1 - np.sqrt(f1)])


def _binh_korn(x: np.ndarray):
    a, b = x
    f1 = 4 * a**2 + 4 * b**2
    f2 = (a - 5) ** 2 + (b - 5) ** 2
    g1 = (a - 5) ** 2 + b**2 - 25
    g2 = 7.7 - ((a - 8) ** 2 + (b + 3) ** 2)
    return np.array([f1, f2]), np.array([g1, g2])


def _tanaka(x: np.ndarray):
    a, b = x
    theta = np.arctan2(a, b)
    g1 = -(a**2 + b**2 - 1 - 0.1 * np.cos(16 * theta))
    g2 = (a - 0.5) ** 2 + (b - 0.5) ** 2 - 0.5
    return np.array([a, b]), np.array([g1, g2])


ZDT1 = ProblemSpec(
    name="zdt1",
    dim=30,
    m=2,
    bounds=(np.zeros(30), np.ones(30)),
    n_constraints=0,
    function=_zdt1,
    pf_oracle=_zdt1_front,
    reference_bounds=(np.zeros(2), np.ones(2)),
)

BINH_KORN = ProblemSpec(
    name="binh_korn",
    dim=2,
    m=2,
    bounds=(np.array([0.0, 0.0]), np.array([5.0, 3.0])),
    n_constraints=2,
    function=_binh_korn,
    reference_bounds=(np.zeros(2), np.array([200.0, 50.0])),
)

TANAKA = ProblemSpec(
    name="tanaka",
    dim=2,
    m=2,
    bounds=(np.zeros(2), np.full(2, np.pi)),
    n_constraints=2,
    function=_tanaka,
)

PROBLEMS: dict[str, ProblemSpec] = {p.name: p for p in (ZDT1, BINH_KORN, TANAKA)}


def register_problem(problem: ProblemSpec) -> None:
    """Add a user problem to the registry (names are unique)"""
    if problem.name in PROBLEMS:
        raise UsageError(f"Problem '{problem.name}' is already registered")
    PROBLEMS[problem.name] = problem
    logger.info(f"Registered problem {problem.name} (dim={problem.dim}, m={problem.m})")


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name.lower()]
    except KeyError:
        raise UsageError(
            f"Unknown problem '{name}'. Available: {', '.join(sorted(PROBLEMS))}"
        ) from None
