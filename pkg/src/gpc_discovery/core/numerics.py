"""Kernel-agnostic numerical primitives."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit, log_ndtr, logsumexp, ndtr

from gpc_discovery.exceptions import (
    ConfigurationError,
    NegativeVarianceError,
    NonPositiveDefiniteError,
    ParticleDegeneracyError,
    ShapeMismatchError,
)
from gpc_discovery.verbose import NumericsMonitor

JITTER_LADDER = (1e-8, 1e-6, 1e-4)
NEGATIVE_VARIANCE_TOLERANCE = 1e-10
SIGMOIDS = ("probit", "logistic")


@dataclass(frozen=True)
class LowerTriangularFactor:
    """Cholesky factor of a symmetric positive definite matrix.

    Parameters
    ----------
    L : np.ndarray
        n x n lower triangular matrix.
    jitter_used : float
        Value added to the diagonal before the factorization succeeded.
    """

    L: np.ndarray
    jitter_used: float = 0.0

    @property
    def size(self) -> int:
        """Dimension of the factorized matrix."""
        return self.L.shape[0]

    def solve_lower(self, b: np.ndarray) -> np.ndarray:
        """Solve L x = b.

        Parameters
        ----------
        b : np.ndarray
            Right-hand side, vector or matrix.

        Returns
        -------
        np.ndarray
            Solution.
        """
        if self.size == 0:
            return np.zeros_like(b, dtype=float)
        return linalg.solve_triangular(self.L, b, lower=True)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve (L L^T) x = b with two triangular solves.

        Parameters
        ----------
        b : np.ndarray
            Right-hand side, vector or matrix.

        Returns
        -------
        np.ndarray
            Solution.
        """
        if self.size == 0:
            return np.zeros_like(b, dtype=float)
        half = linalg.solve_triangular(self.L, b, lower=True)
        return linalg.solve_triangular(self.L, half, lower=True, trans="T")


@dataclass(frozen=True)
class GaussianScalar:
    """Univariate Gaussian.

    Parameters
    ----------
    mean : float
        Mean.
    variance : float
        Non-negative variance.
    """

    mean: float
    variance: float

    def __post_init__(self) -> None:
        """Check the variance sign."""
        if self.variance < 0:
            error_msg = f"Variance must be non-negative, got {self.variance}."
            raise NegativeVarianceError(error_msg)


def cholesky(M: np.ndarray, context: str = "matrix") -> LowerTriangularFactor:
    """Cholesky factorization, retrying with an escalating diagonal jitter.

    The jitter ladder is (1e-8, 1e-6, 1e-4) times the mean of the diagonal.

    Parameters
    ----------
    M : np.ndarray
        Symmetric n x n matrix.
    context : str, optional
        Description of the matrix, used in messages., by default "matrix"

    Returns
    -------
    LowerTriangularFactor
        Lower factor and the jitter which was needed.

    Raises
    ------
    ShapeMismatchError
        If M is not square.
    NonPositiveDefiniteError
        If the factorization still fails with the largest jitter.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        error_msg = f"Cholesky needs a square matrix, got shape {M.shape}."
        raise ShapeMismatchError(error_msg)
    if M.shape[0] == 0:
        return LowerTriangularFactor(L=np.zeros((0, 0)), jitter_used=0.0)
    if not np.all(np.isfinite(M)):
        raise NonPositiveDefiniteError(context, 0.0)
    try:
        return LowerTriangularFactor(L=linalg.cholesky(M, lower=True))
    except linalg.LinAlgError:
        pass
    scale = abs(float(np.mean(np.diag(M))))
    identity = np.eye(M.shape[0])
    jitter = 0.0
    for factor in JITTER_LADDER:
        jitter = factor * scale
        try:
            L = linalg.cholesky(M + jitter * identity, lower=True)
        except linalg.LinAlgError:
            continue
        NumericsMonitor().record_jitter(jitter, context)
        return LowerTriangularFactor(L=L, jitter_used=jitter)
    raise NonPositiveDefiniteError(context, jitter)


def clamp_variances(variances: np.ndarray) -> np.ndarray:
    """Clamp round-off negative variances to 0.

    Parameters
    ----------
    variances : np.ndarray
        Variances.

    Returns
    -------
    np.ndarray
        Non-negative variances.

    Raises
    ------
    NegativeVarianceError
        If a variance is below -1e-10.
    """
    variances = np.asarray(variances, dtype=float)
    if np.any(variances < -NEGATIVE_VARIANCE_TOLERANCE):
        error_msg = (
            f"Conditional variance {variances.min():.3e} is below "
            f"-{NEGATIVE_VARIANCE_TOLERANCE:.0e}."
        )
        raise NegativeVarianceError(error_msg)
    negatives = variances < 0
    for variance in variances[negatives]:
        NumericsMonitor().record_clamp(float(variance))
    return np.where(negatives, 0.0, variances)


def gaussian_conditionals(
    factor: LowerTriangularFactor,
    K_star: np.ndarray,
    k_star_star: np.ndarray,
    centered_f: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional means and variances of several test points.

    Parameters
    ----------
    factor : LowerTriangularFactor
        Cholesky factor of the n x n training covariance.
    K_star : np.ndarray
        n x m cross-covariances.
    k_star_star : np.ndarray
        m prior variances of the test points.
    centered_f : np.ndarray
        n centered training values.

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        Means and variances, both of length m.

    Raises
    ------
    ShapeMismatchError
        If the shapes are inconsistent.
    """
    K_star = np.asarray(K_star, dtype=float)
    k_star_star = np.asarray(k_star_star, dtype=float)
    centered_f = np.asarray(centered_f, dtype=float)
    n = factor.size
    if K_star.ndim != 2 or K_star.shape[0] != n or centered_f.shape != (n,):
        error_msg = (
            f"Inconsistent shapes: factor {n}x{n}, cross-covariance "
            f"{K_star.shape}, centered values {centered_f.shape}."
        )
        raise ShapeMismatchError(error_msg)
    if k_star_star.shape != (K_star.shape[1],):
        error_msg = (
            f"Expected {K_star.shape[1]} prior variances, got {k_star_star.shape}."
        )
        raise ShapeMismatchError(error_msg)
    if n == 0:
        return np.zeros(K_star.shape[1]), clamp_variances(k_star_star)
    whitened_star = factor.solve_lower(K_star)
    whitened_f = factor.solve_lower(centered_f)
    means = whitened_star.T @ whitened_f
    variances = k_star_star - np.sum(whitened_star**2, axis=0)
    return means, clamp_variances(variances)


def gaussian_conditional(
    factor: LowerTriangularFactor,
    k_star: np.ndarray,
    k_star_star: float,
    centered_f: np.ndarray,
) -> GaussianScalar:
    """Conditional distribution of a test value given the training values.

    Parameters
    ----------
    factor : LowerTriangularFactor
        Cholesky factor of the training covariance K.
    k_star : np.ndarray
        Covariances between the training points and the test point.
    k_star_star : float
        Prior variance of the test point.
    centered_f : np.ndarray
        Centered training values.

    Returns
    -------
    GaussianScalar
        Mean k*^T K^-1 f and variance k** - k*^T K^-1 k*.

    Raises
    ------
    ShapeMismatchError
        If the shapes are inconsistent.
    NegativeVarianceError
        If the variance is below -1e-10.
    """
    k_star = np.asarray(k_star, dtype=float)
    if k_star.ndim != 1:
        error_msg = f"k_star must be a vector, got shape {k_star.shape}."
        raise ShapeMismatchError(error_msg)
    means, variances = gaussian_conditionals(
        factor,
        k_star[:, None],
        np.array([k_star_star], dtype=float),
        centered_f,
    )
    return GaussianScalar(mean=float(means[0]), variance=float(variances[0]))


def _check_sigmoid(kind: str) -> None:
    if kind not in SIGMOIDS:
        error_msg = f"Unknown sigmoid '{kind}', expected one of {SIGMOIDS}."
        raise ConfigurationError(error_msg)


def sigmoid(kind: str, t: np.ndarray) -> np.ndarray:
    """Squash latent values into probabilities.

    Parameters
    ----------
    kind : str
        'probit' or 'logistic'.
    t : np.ndarray
        Latent values.

    Returns
    -------
    np.ndarray
        Values in [0, 1].
    """
    _check_sigmoid(kind)
    if kind == "probit":
        return ndtr(t)
    return expit(t)


def log_sigmoid(kind: str, t: np.ndarray) -> np.ndarray:
    """Logarithm of the sigmoid, stable for large |t|.

    Parameters
    ----------
    kind : str
        'probit' or 'logistic'.
    t : np.ndarray
        Latent values.

    Returns
    -------
    np.ndarray
        log(sigmoid(t)), always <= 0.
    """
    _check_sigmoid(kind)
    if kind == "probit":
        return log_ndtr(t)
    return -np.logaddexp(0, -np.asarray(t, dtype=float))


def d_log_sigmoid(kind: str, t: np.ndarray) -> np.ndarray:
    """Derivative of log(sigmoid(t)).

    Parameters
    ----------
    kind : str
        'probit' or 'logistic'.
    t : np.ndarray
        Latent values.

    Returns
    -------
    np.ndarray
        phi(t) / Phi(t) for probit, 1 - expit(t) for logistic.
    """
    _check_sigmoid(kind)
    t = np.asarray(t, dtype=float)
    if kind == "probit":
        log_density = -0.5 * t**2 - 0.5 * np.log(2 * np.pi)
        return np.exp(log_density - log_ndtr(t))
    return expit(-t)


def probit_predictive(g: GaussianScalar) -> float:
    """Integral of Phi(f) against a Gaussian density of f.

    Parameters
    ----------
    g : GaussianScalar
        Distribution of f.

    Returns
    -------
    float
        Phi(mean / sqrt(1 + variance)).
    """
    return float(ndtr(g.mean / np.sqrt(1 + g.variance)))


def probit_predictives(means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Vectorized probit_predictive.

    Parameters
    ----------
    means : np.ndarray
        Means.
    variances : np.ndarray
        Non-negative variances.

    Returns
    -------
    np.ndarray
        Phi(means / sqrt(1 + variances)).
    """
    return ndtr(np.asarray(means) / np.sqrt(1 + np.asarray(variances)))


def ess(weights: np.ndarray) -> float:
    """Effective sample size of a set of weights.

    Parameters
    ----------
    weights : np.ndarray
        Non-negative weights, not necessarily normalized.

    Returns
    -------
    float
        (sum w)^2 / sum w^2.

    Raises
    ------
    ParticleDegeneracyError
        If every weight is zero.
    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        error_msg = "Effective sample size is undefined when all weights are zero."
        raise ParticleDegeneracyError(error_msg)
    normalized = weights / total
    return float(1 / np.sum(normalized**2))


def normalized_weights(log_weights: np.ndarray) -> np.ndarray:
    """Normalized weights from log-weights.

    Parameters
    ----------
    log_weights : np.ndarray
        Log-weights, -inf allowed.

    Returns
    -------
    np.ndarray
        Weights summing to 1.

    Raises
    ------
    ParticleDegeneracyError
        If every log-weight is -inf.
    """
    log_weights = np.asarray(log_weights, dtype=float)
    total = logsumexp(log_weights) if log_weights.size else -np.inf
    if not np.isfinite(total):
        error_msg = "Every particle weight collapsed to zero."
        raise ParticleDegeneracyError(error_msg)
    return np.exp(log_weights - total)


def ess_from_log_weights(log_weights: np.ndarray) -> float:
    """Effective sample size computed from log-weights.

    Parameters
    ----------
    log_weights : np.ndarray
        Log-weights, -inf for dead particles.

    Returns
    -------
    float
        Effective sample size.
    """
    return ess(normalized_weights(log_weights))


def systematic_resample(
    weights: np.ndarray,
    M: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Systematic resampling.

    Parameters
    ----------
    weights : np.ndarray
        Non-negative weights, not necessarily normalized.
    M : int
        Number of ancestors to draw.
    rng : np.random.Generator
        Random stream, a single uniform is drawn.

    Returns
    -------
    np.ndarray
        M ancestor indices in increasing order.

    Raises
    ------
    ParticleDegeneracyError
        If every weight is zero.
    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        error_msg = "Can't resample when all weights are zero."
        raise ParticleDegeneracyError(error_msg)
    cumulative = np.cumsum(weights) * M / total
    cumulative[-1] = M
    positions = rng.uniform() + np.arange(M)
    indices = np.searchsorted(cumulative, positions, side="right")
    return np.clip(indices, 0, len(weights) - 1)
