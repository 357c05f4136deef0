"""Variation pipeline: mating pool selection, DE mutation, polynomial mutation
and bound repair. The order of the operator stack is fixed."""

import logging
from dataclasses import dataclass

import numpy as np

from .core import AlgoConfig, UsageError
from .decomposition import WeightSet

logger = logging.getLogger(__name__)

DE_VARIANT = "rand/1 anchored at x_i"
REPAIR_RULE = "clip"


@dataclass(frozen=True)
class VariationParams:
    F: float
    eta_m: float
    pm_prob: float
    delta: float

    def __post_init__(self):
        checks = [
            ("F", self.F, 0.1, 1.0),
            ("eta_m", self.eta_m, 1.0, 100.0),
            ("pm_prob", self.pm_prob, 0.0, 1.0),
            ("delta", self.delta, 0.1, 1.0),
        ]
        for name, value, low, high in checks:
            if not low <= value <= high:
                raise UsageError(f"{name}={value} outside [{low}, {high}]")

    @classmethod
    def from_config(cls, config: AlgoConfig) -> "VariationParams":
        return cls(F=config.de_F, eta_m=config.pm_eta, pm_prob=config.pm_prob, delta=config.delta)


def select_pool(i: int, weights: WeightSet, delta: float, rng: np.random.Generator) -> np.ndarray:
    """Neighborhood of i with probability delta, otherwise the whole population"""
    if rng.random() < delta:
        return weights.neighborhoods[i]
    return np.arange(len(weights))


def de_rand1(x_i, x_b, x_c, F: float) -> np.ndarray:
    return np.asarray(x_i, dtype=float) + F * (np.asarray(x_b, dtype=float) - np.asarray(x_c, dtype=float))


def de_mutation(X: np.ndarray, i: int, pool, F: float, rng: np.random.Generator) -> np.ndarray:
    """
    v = x_i + F * (x_b - x_c) with b != c drawn without replacement from pool minus i.
    Pools too small for the draw fall back to the whole population.

    Raises:
        UsageError: fewer than two partners available even in the whole population
    """
    pool = np.asarray(pool)
    partners = pool[pool != i]
    if len(partners) < 2:
        logger.warning(f"Mating pool of subproblem {i} too small ({len(pool)}), using whole population")
        partners = np.delete(np.arange(len(X)), i)
    if len(partners) < 2:
        raise UsageError(f"DE mutation needs at least 3 solutions, population has {len(X)}")
    b, c = rng.choice(partners, size=2, replace=False)
    return de_rand1(X[i], X[b], X[c], F)


def polynomial_mutation(x, bounds, eta_m: float, pm_prob: float, rng: np.random.Generator) -> np.ndarray:
    """
    Polynomial mutation with distribution index eta_m; each variable mutates with
    probability pm_prob. Random numbers are always drawn for every variable so the
    stream advances identically whatever pm_prob is.
    """
    x = np.asarray(x, dtype=float)
    lower, upper = bounds
    span = upper - lower
    mutate = rng.random(x.shape) < pm_prob
    u = rng.random(x.shape)
    if not mutate.any():
        return x.copy()

    delta1 = np.clip((x - lower) / span, 0.0, 1.0)
    delta2 = np.clip((upper - x) / span, 0.0, 1.0)
    power = 1.0 / (eta_m + 1.0)

    low_branch = u <= 0.5
    val_low = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta1) ** (eta_m + 1.0)
    val_high = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta2) ** (eta_m + 1.0)
    deltaq = np.where(low_branch, val_low**power - 1.0, 1.0 - val_high**power)

    y = np.where(mutate, x + deltaq * span, x)
    return np.clip(y, lower, upper)


def repair_bounds(x, bounds) -> np.ndarray:
    lower, upper = bounds
    return np.clip(np.asarray(x, dtype=float), lower, upper)


def make_candidate(
    X: np.ndarray,
    i: int,
    weights: WeightSet,
    params: VariationParams,
    bounds,
    rng: np.random.Generator,
) -> np.ndarray:
    """Full pipeline for subproblem i: pool, DE, polynomial mutation, repair"""
    pool = select_pool(i, weights, params.delta, rng)
    mutant = de_mutation(X, i, pool, params.F, rng)
    mutant = polynomial_mutation(mutant, bounds, params.eta_m, params.pm_prob, rng)
    return repair_bounds(mutant, bounds)
