import numpy as np
import pytest

from gpc_discovery.exceptions import ConfigurationError
from gpc_discovery.toy import CIRCLES_FACTOR, TOY_KINDS, ToySpec, gen_toy


@pytest.mark.parametrize("kind", TOY_KINDS)
def test_toy_datasets_are_reproducible(kind):
    first = gen_toy(ToySpec(kind=kind, n=60, noise=0.1, seed=3))
    second = gen_toy(ToySpec(kind=kind, n=60, noise=0.1, seed=3))
    other = gen_toy(ToySpec(kind=kind, n=60, noise=0.1, seed=4))
    assert first.n == 60
    assert first.d == 2
    assert first.feature_names == ["x1", "x2"]
    np.testing.assert_array_equal(first.X, second.X)
    np.testing.assert_array_equal(first.y, second.y)
    assert not np.array_equal(first.X, other.X)


def test_noiseless_blobs_are_split_by_the_diagonal():
    dataset = gen_toy(ToySpec(kind="blobs_linear", n=100, seed=1))
    np.testing.assert_array_equal(dataset.y, dataset.X.sum(axis=1) > 0)
    assert 0 < dataset.y.sum() < 100


@pytest.mark.parametrize("kind", ["moons", "circles"])
def test_balanced_toy_datasets(kind):
    dataset = gen_toy(ToySpec(kind=kind, n=80, noise=0.2, seed=0))
    assert dataset.y.sum() == 40


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "spirals", "n": 10},
        {"kind": "moons", "n": 3},
        {"kind": "moons", "n": 10, "noise": -0.1},
    ],
)
def test_invalid_toy_specs(kwargs):
    with pytest.raises(ConfigurationError):
        ToySpec(**kwargs)


def test_toy_spec_to_dict():
    spec = ToySpec(kind="circles", n=20, noise=0.05, seed=2)
    assert ToySpec(**spec.to_dict()) == spec


def test_noiseless_circles_defeat_linear_separators():
    dataset = gen_toy(ToySpec(kind="circles", n=200, seed=0))
    draws = np.random.default_rng(0)
    angles = draws.uniform(0, 2 * np.pi, 10_000)
    directions = np.column_stack([np.cos(angles), np.sin(angles)])
    offsets = draws.uniform(-1.5, 1.5, 10_000)
    projections = dataset.X @ directions.T
    through_origin = (projections > 0) == dataset.y[:, None]
    shifted = (projections > offsets) == dataset.y[:, None]
    # both orientations of every separator
    origin_acc = np.maximum(through_origin.mean(0), 1 - through_origin.mean(0))
    shifted_acc = np.maximum(shifted.mean(0), 1 - shifted.mean(0))
    assert origin_acc.max() <= 0.6
    # a half-plane can at best take the outer arc beyond the inner circle
    best = 0.5 + np.arccos(CIRCLES_FACTOR) / (2 * np.pi) + 1 / dataset.n
    assert shifted_acc.max() <= best
