"""Posterior predictive probabilities from a weighted particle set."""

from dataclasses import dataclass

import numpy as np

from gpc_discovery.core.model import ModelConfig, Particle, latent_factor
from gpc_discovery.core.numerics import (
    GaussianScalar,
    LowerTriangularFactor,
    gaussian_conditionals,
    probit_predictives,
    sigmoid,
)
from gpc_discovery.exceptions import (
    ConfigurationError,
    EmptyParticleSetError,
    ShapeMismatchError,
)
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.kernels.expressions import gram_diagonal, gram_matrix


@dataclass(frozen=True)
class PredictiveResult:
    """Prediction for one test point.

    Parameters
    ----------
    prob_class1 : float
        Posterior probability of label 1.
    label : int
        1 if prob_class1 >= 0.5, else 0.
    latent : list[GaussianScalar] | None, optional
        Per-particle latent posterior., by default None
    """

    prob_class1: float
    label: int
    latent: list[GaussianScalar] | None = None


def decision(prob_class1: np.ndarray) -> np.ndarray:
    """Labels from probabilities, ties go to 1.

    Parameters
    ----------
    prob_class1 : np.ndarray
        Probabilities of label 1.

    Returns
    -------
    np.ndarray
        Integer labels.
    """
    return (np.asarray(prob_class1) >= 0.5).astype(int)


@dataclass(frozen=True, eq=False)
class _CachedFactor:
    factor: LowerTriangularFactor
    centered_f: np.ndarray


class FactorCache:
    """Training covariance factors, one per particle.

    Entries are keyed by the particle's structure, continuous coordinates and
    latent values, so a modified particle never reuses a stale factor.
    """

    def __init__(self) -> None:
        self._entries: dict[tuple, _CachedFactor] = {}

    @staticmethod
    def _key(p: Particle) -> tuple:
        return (
            p.kernel.to_text(),
            p.theta_u.tobytes(),
            p.eps_u,
            p.eta.tobytes(),
        )

    def get(self, p: Particle, X_train: np.ndarray) -> _CachedFactor:
        """Factor of the particle's training covariance, built once.

        Parameters
        ----------
        p : Particle
            Particle.
        X_train : np.ndarray
            Inputs the particle is conditioned on.

        Returns
        -------
        _CachedFactor
            Factor and centered latent values L eta.
        """
        key = self._key(p)
        if key not in self._entries:
            factor = latent_factor(p, X_train)
            self._entries[key] = _CachedFactor(factor, factor.L @ p.eta)
        return self._entries[key]

    def __len__(self) -> int:
        """Number of cached factors.

        Returns
        -------
        int
            Number of entries.
        """
        return len(self._entries)


def latent_posteriors(
    p: Particle,
    X_train: np.ndarray,
    X_star: np.ndarray,
    model: ModelConfig | None = None,
    cache: FactorCache | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior latent means and variances of several test points.

    Parameters
    ----------
    p : Particle
        Particle conditioned on X_train.
    X_train : np.ndarray
        n x d training inputs.
    X_star : np.ndarray
        m x d test inputs.
    model : ModelConfig | None, optional
        Settings, eps is added to the test variance if predictive_noise.
        , by default None
    cache : FactorCache | None, optional
        Factor cache, a factor is computed if None., by default None

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Means and variances, both of length m.

    Raises
    ------
    ShapeMismatchError
        If eta's length differs from the number of training points.
    """
    model = ModelConfig() if model is None else model
    X_train = np.asarray(X_train, dtype=float)
    X_star = np.asarray(X_star, dtype=float)
    if p.n_aux != X_train.shape[0]:
        error_msg = (
            f"Particle has {p.n_aux} latent values for {X_train.shape[0]} "
            "training points."
        )
        raise ShapeMismatchError(error_msg)
    params = p.params
    k_star_star = gram_diagonal(p.kernel, params, X_star)
    if model.predictive_noise:
        k_star_star = k_star_star + p.epsilon
    if X_train.shape[0] == 0:
        return np.full(X_star.shape[0], p.beta), k_star_star
    cached = (cache or FactorCache()).get(p, X_train)
    K_star = gram_matrix(p.kernel, params, X_train, X_star)
    means, variances = gaussian_conditionals(
        cached.factor,
        K_star,
        k_star_star,
        cached.centered_f,
    )
    return means + p.beta, variances


def latent_posterior(
    p: Particle,
    X_train: np.ndarray,
    x_star: np.ndarray,
    model: ModelConfig | None = None,
    cache: FactorCache | None = None,
) -> GaussianScalar:
    """Posterior distribution of the latent value at one test point.

    Parameters
    ----------
    p : Particle
        Particle conditioned on X_train.
    X_train : np.ndarray
        n x d training inputs.
    x_star : np.ndarray
        Test feature vector.
    model : ModelConfig | None, optional
        Settings., by default None
    cache : FactorCache | None, optional
        Factor cache., by default None

    Returns
    -------
    GaussianScalar
        Mean and variance of f(x_star).
    """
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    means, variances = latent_posteriors(p, X_train, x_star[None, :], model, cache)
    return GaussianScalar(mean=float(means[0]), variance=float(variances[0]))


def monte_carlo_predictive(
    kind: str,
    means: np.ndarray,
    variances: np.ndarray,
    draws: np.ndarray,
) -> np.ndarray:
    """Average of sigmoid(f) over Gaussian draws of f.

    Parameters
    ----------
    kind : str
        'probit' or 'logistic'.
    means : np.ndarray
        Latent means.
    variances : np.ndarray
        Latent variances.
    draws : np.ndarray
        Standard Normal draws, shared by every point.

    Returns
    -------
    np.ndarray
        Monte Carlo estimates, one per point.
    """
    means = np.asarray(means, dtype=float)
    stds = np.sqrt(np.asarray(variances, dtype=float))
    samples = means[None, :] + stds[None, :] * np.asarray(draws)[:, None]
    return np.mean(sigmoid(kind, samples), axis=0)


class Predictor:
    """Predictive averaging over the particles of a set.

    Factors are built once per particle at construction, then shared by every
    query. Monte Carlo predictions use draws fixed per particle, so the
    prediction of a point doesn't depend on the other queried points.

    Parameters
    ----------
    ps : ParticleSet
        Particles conditioned on X_train.
    X_train : np.ndarray
        Training inputs.
    model : ModelConfig | None, optional
        Settings., by default None
    mc_seed : int, optional
        Seed of the Monte Carlo draws., by default 0
    """

    def __init__(
        self,
        ps: ParticleSet,
        X_train: np.ndarray,
        model: ModelConfig | None = None,
        mc_seed: int = 0,
    ) -> None:
        if ps is None or len(ps) == 0:
            error_msg = "Can't predict without particles."
            raise EmptyParticleSetError(error_msg)
        self.model = ModelConfig() if model is None else model
        self.X_train = np.asarray(X_train, dtype=float)
        weights = ps.weights
        alive = np.flatnonzero(weights > 0)
        self.particles = [ps.particles[i] for i in alive]
        self.weights = weights[alive] / weights[alive].sum()
        self.cache = FactorCache()
        if self.X_train.shape[0] > 0:
            for particle in self.particles:
                self.cache.get(particle, self.X_train)
        self._draws = [
            np.random.default_rng(np.random.SeedSequence([mc_seed, int(i)]))
            .standard_normal(self.model.n_mc)
            for i in alive
        ]

    def _as_matrix(self, X_star: np.ndarray) -> np.ndarray:
        X_star = np.asarray(X_star, dtype=float)
        if X_star.ndim == 1:
            X_star = X_star[None, :]
        if X_star.shape[1] != self.X_train.shape[1]:
            error_msg = (
                f"Test points have {X_star.shape[1]} features, "
                f"training points have {self.X_train.shape[1]}."
            )
            raise ShapeMismatchError(error_msg)
        return X_star

    def particle_latents(
        self,
        X_star: np.ndarray,
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        """Latent means and variances under every particle.

        Parameters
        ----------
        X_star : np.ndarray
            m x d test inputs.

        Returns
        -------
        list[tuple[np.ndarray, np.ndarray]]
            (means, variances) per particle.
        """
        X_star = self._as_matrix(X_star)
        return [
            latent_posteriors(p, self.X_train, X_star, self.model, self.cache)
            for p in self.particles
        ]

    def _particle_probabilities(
        self,
        latents: list[tuple[np.ndarray, np.ndarray]],
        force_monte_carlo: bool = False,
    ) -> np.ndarray:
        rows = []
        for (means, variances), draws in zip(latents, self._draws):
            if self.model.sigmoid == "probit" and not force_monte_carlo:
                rows.append(probit_predictives(means, variances))
            else:
                rows.append(
                    monte_carlo_predictive(self.model.sigmoid, means, variances, draws),
                )
        return np.array(rows)

    def predict_proba(
        self,
        X_star: np.ndarray,
        force_monte_carlo: bool = False,
    ) -> np.ndarray:
        """Posterior probability of label 1.

        Parameters
        ----------
        X_star : np.ndarray
            m x d test inputs.
        force_monte_carlo : bool, optional
            Use Monte Carlo even for the probit sigmoid., by default False

        Returns
        -------
        np.ndarray
            Weighted average of the particles' probabilities, length m.
        """
        latents = self.particle_latents(X_star)
        probabilities = self._particle_probabilities(latents, force_monte_carlo)
        return np.clip(self.weights @ probabilities, 0.0, 1.0)

    def predict(
        self,
        X_star: np.ndarray,
        detail: bool = False,
    ) -> list[PredictiveResult]:
        """Predictions with labels and optional per-particle latents.

        Parameters
        ----------
        X_star : np.ndarray
            m x d test inputs.
        detail : bool, optional
            Whether to keep the per-particle latent posteriors., by default False

        Returns
        -------
        list[PredictiveResult]
            One result per test point.
        """
        latents = self.particle_latents(X_star)
        probabilities = np.clip(
            self.weights @ self._particle_probabilities(latents),
            0.0,
            1.0,
        )
        labels = decision(probabilities)
        results = []
        for j, (probability, label) in enumerate(zip(probabilities, labels)):
            latent = None
            if detail:
                latent = [
                    GaussianScalar(float(means[j]), float(variances[j]))
                    for means, variances in latents
                ]
            results.append(PredictiveResult(float(probability), int(label), latent))
        return results


def predict_prob(
    ps: ParticleSet,
    X_train: np.ndarray,
    x_star: np.ndarray,
    K_mc: int | None = None,
    model: ModelConfig | None = None,
    mc_seed: int = 0,
) -> float:
    """Posterior probability of label 1 at one test point.

    Parameters
    ----------
    ps : ParticleSet
        Particles conditioned on X_train.
    X_train : np.ndarray
        Training inputs.
    x_star : np.ndarray
        Test feature vector.
    K_mc : int | None, optional
        Number of Monte Carlo draws for non-probit sigmoids, model.n_mc if
        None., by default None
    model : ModelConfig | None, optional
        Settings., by default None
    mc_seed : int, optional
        Seed of the Monte Carlo draws., by default 0

    Returns
    -------
    float
        Probability in [0, 1].

    Raises
    ------
    EmptyParticleSetError
        If there is no particle.
    """
    model = ModelConfig() if model is None else model
    if K_mc is not None:
        model = ModelConfig(
            sigmoid=model.sigmoid,
            noise_shape=model.noise_shape,
            noise_scale=model.noise_scale,
            predictive_noise=model.predictive_noise,
            n_mc=K_mc,
        )
    predictor = Predictor(ps, X_train, model, mc_seed)
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    return float(predictor.predict_proba(x_star[None, :])[0])


@dataclass(frozen=True)
class ProbabilityGrid:
    """Predictive probabilities over a 2-dimensional lattice.

    Parameters
    ----------
    x1 : np.ndarray
        Lattice coordinates along the first feature.
    x2 : np.ndarray
        Lattice coordinates along the second feature.
    prob : np.ndarray
        prob[i, j] is the probability at (x1[i], x2[j]).
    """

    x1: np.ndarray
    x2: np.ndarray
    prob: np.ndarray

    def points(self) -> np.ndarray:
        """Lattice points, x2 varying fastest.

        Returns
        -------
        np.ndarray
            resolution^2 x 2 coordinates.
        """
        grid_1, grid_2 = np.meshgrid(self.x1, self.x2, indexing="ij")
        return np.column_stack([grid_1.ravel(), grid_2.ravel()])


def probability_grid(
    ps: ParticleSet,
    X_train: np.ndarray,
    bounds: tuple[tuple[float, float], tuple[float, float]],
    resolution: int,
    model: ModelConfig | None = None,
    mc_seed: int = 0,
) -> ProbabilityGrid:
    """Predictive probabilities over a regular lattice of a 2-dimensional box.

    Parameters
    ----------
    ps : ParticleSet
        Particles conditioned on X_train.
    X_train : np.ndarray
        n x 2 training inputs.
    bounds : tuple[tuple[float, float], tuple[float, float]]
        ((x1_min, x1_max), (x2_min, x2_max)).
    resolution : int
        Number of lattice values along each axis.
    model : ModelConfig | None, optional
        Settings., by default None
    mc_seed : int, optional
        Seed of the Monte Carlo draws., by default 0

    Returns
    -------
    ProbabilityGrid
        resolution x resolution probabilities.

    Raises
    ------
    ShapeMismatchError
        If the features are not 2-dimensional.
    ConfigurationError
        If the resolution is not positive.
    """
    X_train = np.asarray(X_train, dtype=float)
    if X_train.ndim != 2 or X_train.shape[1] != 2 or len(bounds) != 2:
        error_msg = "Probability grids need 2-dimensional features."
        raise ShapeMismatchError(error_msg)
    if resolution < 1:
        error_msg = f"resolution must be positive, got {resolution}."
        raise ConfigurationError(error_msg)
    (x1_min, x1_max), (x2_min, x2_max) = bounds
    x1 = np.linspace(x1_min, x1_max, resolution)
    x2 = np.linspace(x2_min, x2_max, resolution)
    grid = ProbabilityGrid(x1=x1, x2=x2, prob=np.zeros((resolution, resolution)))
    predictor = Predictor(ps, X_train, model, mc_seed)
    probabilities = predictor.predict_proba(grid.points())
    return ProbabilityGrid(
        x1=x1,
        x2=x2,
        prob=probabilities.reshape(resolution, resolution),
    )
