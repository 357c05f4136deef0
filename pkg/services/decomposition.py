"""Decomposition (weight) vectors and neighborhood structure.

Two generators are available: the simplex-lattice design (SLD, the uniform
choice) and a Sobol sequence mapped onto the unit simplex with the sorted
differences construction.
"""

import logging
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.stats import qmc

from .core import AlgoConfig, UsageError

logger = logging.getLogger(__name__)

SOBOL_GENERATOR = "scipy.stats.qmc.Sobol(scramble=True)"
SOBOL_SIMPLEX_MAP = "sorted-differences"


@dataclass(frozen=True, eq=False)
class WeightSet:
    """
    Attributes:
        vectors: (N, m) nonnegative rows summing to 1
        neighborhoods: (N, T) indices, row i sorted by distance with i first
    """

    vectors: np.ndarray
    neighborhoods: np.ndarray

    def __post_init__(self):
        for name in ("vectors", "neighborhoods"):
            getattr(self, name).setflags(write=False)

    def __len__(self):
        return len(self.vectors)

    @property
    def T(self) -> int:
        return self.neighborhoods.shape[1]


def _lattice(m: int, h: int):
    if m == 1:
        yield (h,)
        return
    for k in range(h + 1):
        for rest in _lattice(m - 1, h - k):
            yield (k,) + rest


def gen_sld(m: int, h: int) -> np.ndarray:
    """All vectors (k1/h, ..., km/h) with nonnegative integers summing to h, lexicographic"""
    if m < 2 or h < 1:
        raise UsageError(f"SLD needs m >= 2 and h >= 1, got m={m}, h={h}")
    return np.array(list(_lattice(m, h)), dtype=float) / h


def sld_lattice_parameter(m: int, n: int) -> int:
    """Smallest h whose lattice holds at least n vectors"""
    h = 1
    while comb(h + m - 1, m - 1) < n:
        h += 1
    return h


def gen_sld_size(m: int, n: int) -> np.ndarray:
    """n SLD vectors: the lexicographic prefix of the smallest sufficient lattice"""
    h = sld_lattice_parameter(m, n)
    logger.debug(f"SLD lattice h={h} for m={m}, n={n}")
    return gen_sld(m, h)[:n]


def simplex_map(points: np.ndarray) -> np.ndarray:
    """Map points of [0, 1]^(m-1) onto the (m-1)-simplex by sorted differences"""
    points = np.sort(np.atleast_2d(points), axis=1)
    n = points.shape[0]
    padded = np.hstack([np.zeros((n, 1)), points, np.ones((n, 1))])
    return np.diff(padded, axis=1)


def gen_sobol(m: int, n: int, seed: int = 0) -> np.ndarray:
    """First n points of a scrambled (m-1)-dimensional Sobol sequence on the simplex"""
    if m < 2 or n < 1:
        raise UsageError(f"Sobol weights need m >= 2 and n >= 1, got m={m}, n={n}")
    sampler = qmc.Sobol(d=m - 1, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # balance warning for n not a power of two
        warnings.simplefilter("ignore", UserWarning)
        points = sampler.random(n)
    return simplex_map(points)


def neighborhoods(vectors: np.ndarray, T: int) -> np.ndarray:
    """
    Indices of the T nearest vectors (Euclidean), self first, ties by lower index.

    Raises:
        UsageError: T outside [1, len(vectors)]
    """
    vectors = np.asarray(vectors, dtype=float)
    n = len(vectors)
    if T < 1 or T > n:
        raise UsageError(f"Neighborhood size T={T} must be within [1, {n}]")
    diff = vectors[:, None, :] - vectors[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=2))
    np.fill_diagonal(dist, -1.0)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :T]


def build_weights(config: AlgoConfig, m: int) -> WeightSet:
    """Weight set and neighborhoods for a configuration, computed once per run"""
    if config.decomp == "sld":
        vectors = gen_sld_size(m, config.pop_size)
    else:
        vectors = gen_sobol(m, config.pop_size, seed=config.seed)
    return WeightSet(vectors=vectors, neighborhoods=neighborhoods(vectors, config.T))


def tracked_vectors(m: int) -> np.ndarray:
    """Default vectors followed by trajectory networks: simplex corners plus the centroid"""
    return np.vstack([np.eye(m), np.full((1, m), 1.0 / m)])
