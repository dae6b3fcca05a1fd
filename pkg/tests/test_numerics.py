from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from gpc_discovery.core.numerics import (
    GaussianScalar,
    cholesky,
    clamp_variances,
    d_log_sigmoid,
    ess,
    ess_from_log_weights,
    gaussian_conditional,
    gaussian_conditionals,
    log_sigmoid,
    normalized_weights,
    probit_predictive,
    probit_predictives,
    sigmoid,
    systematic_resample,
)
from gpc_discovery.exceptions import (
    ConfigurationError,
    NegativeVarianceError,
    NonPositiveDefiniteError,
    ParticleDegeneracyError,
    ShapeMismatchError,
)
from gpc_discovery.verbose import NumericsMonitor


def _spd(rng, n):
    B = rng.standard_normal((n, n))
    return B @ B.T + n * np.eye(n)


def test_cholesky_reconstruction(rng):
    M = _spd(rng, 8)
    factor = cholesky(M)
    assert factor.jitter_used == 0.0
    np.testing.assert_allclose(np.tril(factor.L), factor.L)
    assert np.max(np.abs(factor.L @ factor.L.T - M)) < 1e-10 * np.max(np.abs(M))
    b = rng.standard_normal(8)
    np.testing.assert_allclose(factor.solve(b), np.linalg.solve(M, b))
    np.testing.assert_allclose(factor.solve_lower(b), np.linalg.solve(factor.L, b))


def test_cholesky_jitter_ladder():
    factor = cholesky(np.ones((5, 5)), context="rank one")
    assert factor.jitter_used == pytest.approx(1e-8)
    assert NumericsMonitor().as_dict()["jitter_events"] == 1


def test_cholesky_failures():
    with pytest.raises(NonPositiveDefiniteError):
        cholesky(-np.eye(3))
    with pytest.raises(NonPositiveDefiniteError):
        cholesky(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(ShapeMismatchError):
        cholesky(np.ones((2, 3)))


def test_cholesky_empty():
    factor = cholesky(np.zeros((0, 0)))
    assert factor.size == 0
    assert factor.solve(np.zeros(0)).shape == (0,)


def test_conditionals_match_dense_inverse(rng):
    joint = _spd(rng, 9)
    K, K_star, k_star_star = joint[:6, :6], joint[:6, 6:], np.diag(joint[6:, 6:])
    f = rng.standard_normal(6)
    means, variances = gaussian_conditionals(cholesky(K), K_star, k_star_star, f)
    inverse = np.linalg.inv(K)
    np.testing.assert_allclose(means, K_star.T @ inverse @ f, atol=1e-10)
    np.testing.assert_allclose(
        variances,
        k_star_star - np.einsum("ij,ik,kj->j", K_star, inverse, K_star),
        atol=1e-10,
    )
    single = gaussian_conditional(cholesky(K), K_star[:, 0], k_star_star[0], f)
    assert single.mean == pytest.approx(means[0])
    assert single.variance == pytest.approx(variances[0])


def test_conditionals_without_training_points():
    factor = cholesky(np.zeros((0, 0)))
    means, variances = gaussian_conditionals(
        factor,
        np.zeros((0, 3)),
        np.array([1.0, 2.0, 3.0]),
        np.zeros(0),
    )
    np.testing.assert_array_equal(means, np.zeros(3))
    np.testing.assert_array_equal(variances, [1.0, 2.0, 3.0])


def test_conditionals_shape_errors(rng):
    factor = cholesky(_spd(rng, 4))
    with pytest.raises(ShapeMismatchError):
        gaussian_conditionals(factor, np.zeros((3, 2)), np.ones(2), np.zeros(4))
    with pytest.raises(ShapeMismatchError):
        gaussian_conditionals(factor, np.zeros((4, 2)), np.ones(3), np.zeros(4))


def test_clamp_variances():
    np.testing.assert_array_equal(clamp_variances(np.array([1.0, -1e-12])), [1.0, 0.0])
    assert NumericsMonitor().as_dict()["clamped_variances"] == 1
    with pytest.raises(NegativeVarianceError):
        clamp_variances(np.array([1.0, -1e-6]))
    with pytest.raises(NegativeVarianceError):
        GaussianScalar(0.0, -1.0)


@pytest.mark.parametrize("kind", ["probit", "logistic"])
def test_sigmoid_symmetry_and_tails(kind):
    t = np.linspace(-50, 50, 101)
    np.testing.assert_allclose(sigmoid(kind, t) + sigmoid(kind, -t), 1.0)
    log_values = log_sigmoid(kind, t)
    assert np.all(np.isfinite(log_values))
    assert np.all(log_values <= 0)
    assert log_sigmoid(kind, np.array([-800.0]))[0] < -700
    assert np.isfinite(log_sigmoid(kind, np.array([-800.0]))[0])


@pytest.mark.parametrize("kind", ["probit", "logistic"])
def test_log_sigmoid_derivative(kind):
    t = np.linspace(-30, 30, 61)
    h = 1e-6
    finite_difference = (log_sigmoid(kind, t + h) - log_sigmoid(kind, t - h)) / (2 * h)
    np.testing.assert_allclose(
        d_log_sigmoid(kind, t),
        finite_difference,
        rtol=1e-5,
        atol=1e-7,
    )


def test_unknown_sigmoid():
    with pytest.raises(ConfigurationError, match="sigmoid"):
        sigmoid("tanh", np.zeros(1))


def test_probit_predictive_matches_monte_carlo():
    g = GaussianScalar(mean=0.7, variance=2.0)
    draws = np.random.default_rng(5).standard_normal(400_000)
    monte_carlo = float(np.mean(ndtr(g.mean + np.sqrt(g.variance) * draws)))
    assert probit_predictive(g) == pytest.approx(monte_carlo, abs=3e-3)
    assert probit_predictive(GaussianScalar(0.0, 5.0)) == pytest.approx(0.5)
    np.testing.assert_allclose(
        probit_predictives(np.array([0.7, 0.0]), np.array([2.0, 0.0])),
        [probit_predictive(g), 0.5],
    )


def test_ess():
    assert ess(np.ones(10)) == pytest.approx(10.0)
    assert ess(np.array([0.0, 3.0, 0.0])) == pytest.approx(1.0)
    assert ess(np.array([1.0, 1.0, 2.0])) == pytest.approx(16 / 6)
    with pytest.raises(ParticleDegeneracyError):
        ess(np.zeros(3))


def test_normalized_weights():
    weights = normalized_weights(np.array([0.0, np.log(3.0), -np.inf]))
    np.testing.assert_allclose(weights, [0.25, 0.75, 0.0])
    assert ess_from_log_weights(np.array([-1000.0, -1000.0])) == pytest.approx(2.0)
    with pytest.raises(ParticleDegeneracyError):
        normalized_weights(np.full(3, -np.inf))


def test_systematic_resample_degenerate_weights(rng):
    np.testing.assert_array_equal(
        systematic_resample(np.array([0.0, 1.0, 0.0]), 4, rng),
        [1, 1, 1, 1],
    )
    with pytest.raises(ParticleDegeneracyError):
        systematic_resample(np.zeros(3), 3, rng)


@settings(max_examples=100, deadline=None)
@given(
    weights=st.lists(
        st.floats(min_value=0, max_value=10, allow_subnormal=False),
        min_size=1,
        max_size=12,
    ),
    seed=st.integers(0, 2**32 - 1),
)
def test_systematic_resample_counts(weights, seed):
    weights = np.array(weights)
    if weights.sum() <= 0:
        return
    M = weights.size
    ancestors = systematic_resample(weights, M, np.random.default_rng(seed))
    assert ancestors.shape == (M,)
    assert np.all(np.diff(ancestors) >= 0)
    counts = np.bincount(ancestors, minlength=M)
    expected = M * weights / weights.sum()
    assert np.all(counts >= np.floor(expected - 1e-9))
    assert np.all(counts <= np.ceil(expected + 1e-9))


def test_monitor_counts_every_thread_update():
    monitor = NumericsMonitor()

    def record(_):
        for _ in range(500):
            monitor.record_divergence()
            monitor.record_clamp(-1e-12)

    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(record, range(16)))
    counts = monitor.as_dict()
    assert counts["divergences"] == 8000
    assert counts["clamped_variances"] == 8000
