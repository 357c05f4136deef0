import numpy as np
import pytest

from services.core import UsageError
from services.decomposition import (
    build_weights,
    gen_sld,
    gen_sld_size,
    gen_sobol,
    neighborhoods,
    sld_lattice_parameter,
    tracked_vectors,
)


def test_sld_two_objectives():
    expected = [[0, 1], [0.25, 0.75], [0.5, 0.5], [0.75, 0.25], [1, 0]]
    assert gen_sld(2, 4).tolist() == expected


def test_sld_three_objectives_count():
    vectors = gen_sld(3, 2)
    assert len(vectors) == 6
    assert len({tuple(v) for v in vectors}) == 6


def test_sld_size_picks_smallest_lattice():
    assert sld_lattice_parameter(2, 100) == 99
    assert len(gen_sld_size(2, 100)) == 100
    assert sld_lattice_parameter(3, 300) == 23


def test_sld_rejects_bad_parameters():
    with pytest.raises(UsageError):
        gen_sld(1, 4)


@pytest.mark.parametrize("m,n", [(2, 1), (2, 100), (3, 57), (4, 10)])
def test_sobol_vectors_lie_on_simplex(m, n):
    vectors = gen_sobol(m, n, seed=4)
    assert vectors.shape == (n, m)
    assert np.all(vectors >= 0)
    assert np.allclose(vectors.sum(axis=1), 1.0, atol=1e-12)


def test_sobol_is_deterministic():
    assert np.array_equal(gen_sobol(3, 1, seed=9), gen_sobol(3, 1, seed=9))


def test_sobol_vectors_distinct():
    vectors = gen_sobol(2, 1000, seed=1)
    assert len({tuple(v) for v in vectors}) == 1000


def test_sobol_more_uniform_than_random_draws():
    n = 1000
    first = np.sort(gen_sobol(2, n, seed=3)[:, 0])
    uniform = np.sort(np.random.default_rng(3).random(n))
    grid = (np.arange(1, n + 1) - 0.5) / n
    assert np.max(np.abs(first - grid)) < np.max(np.abs(uniform - grid))


def test_neighborhoods_nearest_first():
    vectors = gen_sld(2, 4)
    hood = neighborhoods(vectors, 2)
    assert hood[0].tolist() == [0, 1]
    assert all(row[0] == i for i, row in enumerate(hood))


def test_neighborhoods_limits():
    vectors = gen_sld(2, 4)
    assert neighborhoods(vectors, 1).tolist() == [[0], [1], [2], [3], [4]]
    assert all(sorted(row) == list(range(5)) for row in neighborhoods(vectors, 5).tolist())
    with pytest.raises(UsageError):
        neighborhoods(vectors, 6)


def test_build_weights(small_config):
    weights = build_weights(small_config, 2)
    assert len(weights) == 20
    assert weights.T == 10
    sobol = build_weights(small_config.replace(decomp="sobol"), 3)
    assert sobol.vectors.shape == (20, 3)


def test_tracked_vectors_are_corners_and_centroid():
    assert tracked_vectors(2).tolist() == [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]]
    assert tracked_vectors(3).shape == (4, 3)
