import numpy as np
import pytest

from gpc_discovery.exceptions import EmptyAccuracyListError, ShapeMismatchError
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.prediction.metrics import (
    Accuracy,
    accuracy,
    online_average_accuracy,
)
from gpc_discovery.prediction.predictor import Predictor, decision


def test_accuracy_counts_matches():
    metric = Accuracy()
    assert metric.evaluate(np.array([1, 0, 1, 1]), np.array([1, 1, 1, 0])) == 0.5
    assert metric.evaluate(np.array([0, 1]), np.array([0, 1])) == 1.0


def test_accuracy_of_nothing_is_zero():
    assert Accuracy().evaluate(np.zeros(0), np.zeros(0)) == 0.0


def test_accuracy_shapes_must_match():
    with pytest.raises(ShapeMismatchError):
        Accuracy().evaluate(np.zeros(3), np.zeros(4))


def test_particle_accuracy(make_particle, small_dataset):
    particles = [
        make_particle("(LIN)", n=small_dataset.n, seed=i) for i in range(2)
    ]
    ps = ParticleSet(particles=particles, absorbed=small_dataset.n)
    X, y = small_dataset.X, small_dataset.y
    labels = decision(Predictor(ps, X).predict_proba(X))
    assert accuracy(ps, X, X, y) == pytest.approx(np.mean(labels == y))


def test_online_average_accuracy():
    assert online_average_accuracy([0.5, 1.0, 0.75]) == pytest.approx(0.75)
    with pytest.raises(EmptyAccuracyListError):
        online_average_accuracy([])
