"""Aggregation functions, ideal-point tracking and the dynamic penalty.

Aggregations operate on scaled objectives. The penalized value of a solution
at generation t is g_agg + (C * t) ** alpha * v, which starts at zero pressure
and grows every generation.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import UsageError
from .problems import scale_with

logger = logging.getLogger(__name__)

AWT_EPSILON = 1e-6


@dataclass(frozen=True)
class PenaltySchedule:
    C: float = 5.0
    alpha: float = 2.0

    def __post_init__(self):
        if self.C <= 0 or self.alpha <= 0:
            raise UsageError(f"Penalty constants must be positive, got C={self.C}, alpha={self.alpha}")

    def factor(self, t: int) -> float:
        return (self.C * t) ** self.alpha


DEFAULT_PENALTY = PenaltySchedule()


@dataclass
class IdealPoint:
    """
    Running component-wise minima of the raw objectives; owned by a single run.

    The scaling bounds are recomputed every generation, so z stays unscaled and
    is mapped with the bounds of the moment by scaled_ideal before aggregation.
    """

    z: np.ndarray

    def update(self, f) -> None:
        self.z = update_ideal(self.z, f)


def scaled_ideal(z, scale) -> np.ndarray:
    """Ideal point in the scaled objective space given by scale = (lower, upper)"""
    lower, upper = scale
    return scale_with(z, lower, upper)[0]


def _check(f, lam, z):
    f = np.asarray(f, dtype=float)
    lam = np.asarray(lam, dtype=float)
    z = np.asarray(z, dtype=float)
    if f.shape[-1] != lam.shape[-1] or f.shape[-1] != z.shape[-1]:
        raise UsageError(
            f"Aggregation vectors differ in length: f={f.shape}, lambda={lam.shape}, z={z.shape}"
        )
    return f, lam, z


def adjusted_weights(lam) -> np.ndarray:
    """Reciprocal-normalized weights with an epsilon floor; works row-wise"""
    lam = np.asarray(lam, dtype=float)
    inv = 1.0 / np.maximum(lam, AWT_EPSILON)
    return inv / inv.sum(axis=-1, keepdims=True)


def wt(f_scaled, lam, z) -> float | np.ndarray:
    """
    Weighted Tchebycheff max_j lambda_j * |f_j - z_j|.
    Broadcasts over rows: one f against many lambdas, or many f against many lambdas.
    """
    f, lam, z = _check(f_scaled, lam, z)
    value = np.max(lam * np.abs(f - z), axis=-1)
    return float(value) if np.ndim(value) == 0 else value


def awt(f_scaled, lam, z) -> float | np.ndarray:
    """Tchebycheff with adjusted (reciprocal-normalized) weights"""
    f, lam, z = _check(f_scaled, lam, z)
    return wt(f, adjusted_weights(lam), z)


AGGREGATIONS: dict[str, Callable] = {"wt": wt, "awt": awt}


def get_aggregation(name: str) -> Callable:
    try:
        return AGGREGATIONS[name]
    except KeyError:
        raise UsageError(f"Unknown aggregation '{name}'") from None


def penalized(g_agg, t: int, v, sched: PenaltySchedule = DEFAULT_PENALTY):
    """Dynamic penalty g_agg + (C*t)^alpha * v"""
    return g_agg + sched.factor(t) * v


def update_ideal(z, f) -> np.ndarray:
    """Component-wise minimum; f may be a single vector or a batch of rows"""
    z = np.asarray(z, dtype=float)
    f = np.atleast_2d(np.asarray(f, dtype=float))
    if f.shape[-1] != z.shape[-1]:
        raise UsageError(f"Ideal point has {z.shape[-1]} objectives, got {f.shape[-1]}")
    return np.minimum(z, f.min(axis=0))
