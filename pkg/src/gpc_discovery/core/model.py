"""Gaussian process classification model with a kernel structure prior.

The latent values are reparameterized as f = L eta + beta, with L the
Cholesky factor of k_theta(X, X) + eps I and eta standard Normal.
Continuous coordinates are always ordered as (theta_u, eps_u, beta, eta).
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg
from scipy.special import gammaln
from scipy.stats import invgamma, norm

from gpc_discovery.core.numerics import (
    SIGMOIDS,
    LowerTriangularFactor,
    cholesky,
    d_log_sigmoid,
    log_sigmoid,
)
from gpc_discovery.exceptions import (
    ConfigurationError,
    NonFiniteGradientError,
    ShapeMismatchError,
)
from gpc_discovery.kernels.expressions import (
    KernelExpression,
    gram_matrix,
    gram_matrix_gradients,
    transform_params,
)
from gpc_discovery.kernels.grammar import (
    PcfgConfig,
    kernel_log_prior,
    sample_kernel,
)


@dataclass(frozen=True)
class ModelConfig:
    """Likelihood and noise prior settings.

    Parameters
    ----------
    sigmoid : str, optional
        'probit' or 'logistic'., by default "probit"
    noise_shape : float, optional
        Shape of the InverseGamma prior of eps., by default 1.0
    noise_scale : float, optional
        Scale of the InverseGamma prior of eps., by default 1.0
    predictive_noise : bool, optional
        Whether eps is added to the test points' prior variance., by default True
    n_mc : int, optional
        Number of Monte Carlo draws for non-probit predictions., by default 256
    """

    sigmoid: str = "probit"
    noise_shape: float = 1.0
    noise_scale: float = 1.0
    predictive_noise: bool = True
    n_mc: int = 256

    def __post_init__(self) -> None:
        """Validate the settings.

        Raises
        ------
        ConfigurationError
            If a value is out of range.
        """
        if self.sigmoid not in SIGMOIDS:
            error_msg = f"sigmoid must be one of {SIGMOIDS}, got '{self.sigmoid}'."
            raise ConfigurationError(error_msg)
        if self.noise_shape <= 0 or self.noise_scale <= 0:
            error_msg = "noise_shape and noise_scale must be positive."
            raise ConfigurationError(error_msg)
        if self.n_mc < 1:
            error_msg = f"n_mc must be positive, got {self.n_mc}."
            raise ConfigurationError(error_msg)

    def to_dict(self) -> dict:
        """Configuration as a dictionnary.

        Returns
        -------
        dict
            Field name -> value.
        """
        return {
            "sigmoid": self.sigmoid,
            "noise_shape": self.noise_shape,
            "noise_scale": self.noise_scale,
            "predictive_noise": self.predictive_noise,
            "n_mc": self.n_mc,
        }

    @classmethod
    def from_dict(cls, content: dict) -> "ModelConfig":
        """Build the configuration from its dictionnary form."""
        return cls(**content)


@dataclass(frozen=True, eq=False)
class Particle:
    """One posterior hypothesis.

    Parameters
    ----------
    kernel : KernelExpression
        Kernel structure.
    theta_u : np.ndarray
        Unconstrained kernel parameters, in canonical order.
    eps_u : float
        Log of the noise eps.
    beta : float
        Latent mean offset.
    eta : np.ndarray
        Whitened latent values, one per absorbed data point.
    log_weight : float, optional
        Log of the importance weight., by default 0.0
    """

    kernel: KernelExpression
    theta_u: np.ndarray
    eps_u: float
    beta: float
    eta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    log_weight: float = 0.0

    def __post_init__(self) -> None:
        """Normalize arrays and check the parameter vector length.

        Raises
        ------
        ShapeMismatchError
            If theta_u's length doesn't match the kernel's parameter count.
        """
        theta_u = np.asarray(self.theta_u, dtype=float).reshape(-1)
        if theta_u.shape[0] != self.kernel.param_dim:
            error_msg = (
                f"Kernel {self.kernel.to_text()} needs {self.kernel.param_dim} "
                f"parameters, got {theta_u.shape[0]}."
            )
            raise ShapeMismatchError(error_msg)
        object.__setattr__(self, "theta_u", theta_u)
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float).reshape(-1))
        object.__setattr__(self, "eps_u", float(self.eps_u))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "log_weight", float(self.log_weight))

    @property
    def epsilon(self) -> float:
        """Noise eps = exp(eps_u)."""
        return float(np.exp(self.eps_u))

    @property
    def params(self) -> np.ndarray:
        """Constrained kernel parameters."""
        return transform_params(self.kernel, self.theta_u)

    @property
    def n_aux(self) -> int:
        """Number of whitened latent values."""
        return self.eta.shape[0]

    @property
    def continuous(self) -> np.ndarray:
        """Continuous coordinates (theta_u, eps_u, beta, eta) as one vector."""
        return np.concatenate(
            [self.theta_u, [self.eps_u], [self.beta], self.eta],
        )

    def with_continuous(self, vector: np.ndarray) -> "Particle":
        """Copy of the particle with new continuous coordinates.

        Parameters
        ----------
        vector : np.ndarray
            Coordinates ordered as (theta_u, eps_u, beta, eta).

        Returns
        -------
        Particle
            New particle, same kernel and weight.
        """
        vector = np.asarray(vector, dtype=float)
        dim = self.kernel.param_dim
        if vector.shape != (dim + 2 + self.n_aux,):
            error_msg = (
                f"Expected {dim + 2 + self.n_aux} coordinates, got {vector.shape}."
            )
            raise ShapeMismatchError(error_msg)
        return replace(
            self,
            theta_u=vector[:dim].copy(),
            eps_u=vector[dim],
            beta=vector[dim + 1],
            eta=vector[dim + 2 :].copy(),
        )

    def with_weight(self, log_weight: float) -> "Particle":
        """Copy of the particle with another log-weight.

        Parameters
        ----------
        log_weight : float
            New log-weight.

        Returns
        -------
        Particle
            New particle.
        """
        return replace(self, log_weight=log_weight)

    def is_identical(self, other: "Particle") -> bool:
        """Bitwise equality of every field.

        Parameters
        ----------
        other : Particle
            Particle to compare to.

        Returns
        -------
        bool
            True if all fields are exactly equal.
        """
        return (
            self.kernel == other.kernel
            and np.array_equal(self.theta_u, other.theta_u)
            and self.eps_u == other.eps_u
            and self.beta == other.beta
            and np.array_equal(self.eta, other.eta)
            and self.log_weight == other.log_weight
        )


def log_noise_prior(eps_u: float, model: ModelConfig) -> float:
    """Log-density of eps_u when eps = exp(eps_u) is InverseGamma distributed.

    Parameters
    ----------
    eps_u : float
        Log of the noise.
    model : ModelConfig
        Prior shape and scale.

    Returns
    -------
    float
        log InverseGamma(exp(eps_u)) + eps_u.
    """
    a, b = model.noise_shape, model.noise_scale
    return float(a * np.log(b) - gammaln(a) - a * eps_u - b * np.exp(-eps_u))


def _d_log_noise_prior(eps_u: float, model: ModelConfig) -> float:
    return float(-model.noise_shape + model.noise_scale * np.exp(-eps_u))


def sample_prior(
    pcfg: PcfgConfig,
    n_aux: int,
    rng: np.random.Generator,
    model: ModelConfig | None = None,
    kernel: KernelExpression | None = None,
) -> Particle:
    """Draw a particle from the prior, with unit weight.

    Parameters
    ----------
    pcfg : PcfgConfig
        Kernel grammar.
    n_aux : int
        Number of whitened latent values.
    rng : np.random.Generator
        Random stream.
    model : ModelConfig | None, optional
        Noise prior, default settings if None., by default None
    kernel : KernelExpression | None, optional
        Fixed kernel structure, sampled from pcfg if None., by default None

    Returns
    -------
    Particle
        Prior particle with log_weight 0.
    """
    model = ModelConfig() if model is None else model
    if kernel is None:
        kernel = sample_kernel(pcfg, rng)
    theta_u = rng.standard_normal(kernel.param_dim)
    epsilon = invgamma.rvs(model.noise_shape, scale=model.noise_scale, random_state=rng)
    beta = rng.standard_normal()
    eta = rng.standard_normal(n_aux)
    return Particle(
        kernel=kernel,
        theta_u=theta_u,
        eps_u=float(np.log(epsilon)),
        beta=beta,
        eta=eta,
        log_weight=0.0,
    )


def extend_aux(p: Particle, m: int, rng: np.random.Generator) -> Particle:
    """Append m fresh standard Normal values to eta.

    Parameters
    ----------
    p : Particle
        Particle to extend.
    m : int
        Number of new values.
    rng : np.random.Generator
        Random stream.

    Returns
    -------
    Particle
        Extended particle, every other field unchanged.
    """
    if m == 0:
        return p
    return replace(p, eta=np.concatenate([p.eta, rng.standard_normal(m)]))


def _check_data(p: Particle, X: np.ndarray, y: np.ndarray | None = None) -> None:
    n = X.shape[0]
    if p.n_aux != n:
        error_msg = f"Particle has {p.n_aux} latent values for {n} data points."
        raise ShapeMismatchError(error_msg)
    if y is not None and y.shape != (n,):
        error_msg = f"{n} data points but labels of shape {y.shape}."
        raise ShapeMismatchError(error_msg)


def noisy_gram(p: Particle, X: np.ndarray) -> np.ndarray:
    """Training covariance k_theta(X, X) + eps I.

    Parameters
    ----------
    p : Particle
        Particle.
    X : np.ndarray
        n x d inputs.

    Returns
    -------
    np.ndarray
        n x n covariance.
    """
    X = np.asarray(X, dtype=float)
    gram = gram_matrix(p.kernel, p.params, X)
    return gram + p.epsilon * np.eye(X.shape[0])


def latent_factor(p: Particle, X: np.ndarray) -> LowerTriangularFactor:
    """Cholesky factor of the particle's training covariance.

    Parameters
    ----------
    p : Particle
        Particle.
    X : np.ndarray
        n x d inputs.

    Returns
    -------
    LowerTriangularFactor
        Factor of k_theta(X, X) + eps I.
    """
    return cholesky(noisy_gram(p, X), context=f"{p.kernel.to_text()} gram + eps I")


def latent_f(
    p: Particle,
    X: np.ndarray,
    factor: LowerTriangularFactor | None = None,
) -> np.ndarray:
    """Latent values f = L eta + beta.

    Parameters
    ----------
    p : Particle
        Particle, with one eta entry per row of X.
    X : np.ndarray
        n x d inputs.
    factor : LowerTriangularFactor | None, optional
        Precomputed factor, computed if None., by default None

    Returns
    -------
    np.ndarray
        Length n latent values.

    Raises
    ------
    ShapeMismatchError
        If eta's length differs from the number of rows of X.
    NonPositiveDefiniteError
        If the covariance can't be factorized.
    """
    X = np.asarray(X, dtype=float)
    _check_data(p, X)
    if X.shape[0] == 0:
        return np.zeros(0)
    factor = latent_factor(p, X) if factor is None else factor
    return factor.L @ p.eta + p.beta


def log_likelihood_pointwise(f: np.ndarray, y: np.ndarray, sigmoid: str) -> np.ndarray:
    """Bernoulli log-likelihood of each label.

    Parameters
    ----------
    f : np.ndarray
        Latent values.
    y : np.ndarray
        Labels in {0, 1}.
    sigmoid : str
        'probit' or 'logistic'.

    Returns
    -------
    np.ndarray
        y log s(f) + (1 - y) log(1 - s(f)), using s(-f) = 1 - s(f).
    """
    signs = 2 * np.asarray(y, dtype=float) - 1
    return log_sigmoid(sigmoid, signs * f)


def log_prior_terms(
    p: Particle,
    pcfg: PcfgConfig | None,
    model: ModelConfig,
) -> float:
    """Log-prior of the particle.

    Parameters
    ----------
    p : Particle
        Particle.
    pcfg : PcfgConfig | None
        Kernel grammar, the structure prior is left out if None.
    model : ModelConfig
        Noise prior.

    Returns
    -------
    float
        Sum of the structure, theta_u, eps_u, beta and eta log-priors.
    """
    structure = 0.0 if pcfg is None else kernel_log_prior(p.kernel, pcfg)
    theta = float(np.sum(norm.logpdf(p.theta_u)))
    noise = log_noise_prior(p.eps_u, model)
    beta = float(norm.logpdf(p.beta))
    eta = float(np.sum(norm.logpdf(p.eta)))
    return structure + theta + noise + beta + eta


def log_likelihood_terms(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    model: ModelConfig,
    factor: LowerTriangularFactor | None = None,
) -> float:
    """Bernoulli log-likelihood of the labels.

    Parameters
    ----------
    p : Particle
        Particle, with one eta entry per row of X.
    X : np.ndarray
        n x d inputs.
    y : np.ndarray
        Labels in {0, 1}.
    model : ModelConfig
        Likelihood settings.
    factor : LowerTriangularFactor | None, optional
        Precomputed factor., by default None

    Returns
    -------
    float
        Sum of the pointwise log-likelihoods.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    _check_data(p, X, y)
    f = latent_f(p, X, factor)
    return float(np.sum(log_likelihood_pointwise(f, y, model.sigmoid)))


def log_joint(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    pcfg: PcfgConfig | None,
    model: ModelConfig,
) -> float:
    """Log-density of the particle and the labels.

    Parameters
    ----------
    p : Particle
        Particle, with one eta entry per row of X.
    X : np.ndarray
        n x d inputs.
    y : np.ndarray
        Labels in {0, 1}.
    pcfg : PcfgConfig | None
        Kernel grammar, the structure prior is left out if None.
    model : ModelConfig
        Likelihood and noise prior settings.

    Returns
    -------
    float
        log_prior_terms + log_likelihood_terms.
    """
    prior = log_prior_terms(p, pcfg, model)
    return prior + log_likelihood_terms(p, X, y, model)


def _phi_lower(matrix: np.ndarray) -> np.ndarray:
    """Lower triangle with halved diagonal."""
    lower = np.tril(matrix)
    lower[np.diag_indices_from(lower)] *= 0.5
    return lower


def log_joint_and_gradient(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    pcfg: PcfgConfig | None,
    model: ModelConfig,
) -> tuple[float, np.ndarray]:
    """Log-joint and its gradient over the continuous coordinates.

    The gradient flows through the Cholesky factor with the reverse-mode
    Cholesky rule, sharing one factorization with the value.

    Parameters
    ----------
    p : Particle
        Particle, with one eta entry per row of X.
    X : np.ndarray
        n x d inputs.
    y : np.ndarray
        Labels in {0, 1}.
    pcfg : PcfgConfig | None
        Kernel grammar, the structure prior is left out if None.
    model : ModelConfig
        Likelihood and noise prior settings.

    Returns
    -------
    tuple[float, np.ndarray]
        Log-joint, gradient ordered as (theta_u, eps_u, beta, eta).

    Raises
    ------
    NonFiniteGradientError
        If the gradient has non-finite entries.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    _check_data(p, X, y)
    n = X.shape[0]
    prior = log_prior_terms(p, pcfg, model)
    d_theta = -p.theta_u.copy()
    d_eps = _d_log_noise_prior(p.eps_u, model)
    d_beta = -p.beta
    d_eta = -p.eta.copy()
    if n == 0:
        gradient = np.concatenate([d_theta, [d_eps, d_beta], d_eta])
        return prior, gradient

    gram, gram_derivatives = gram_matrix_gradients(p.kernel, p.theta_u, X)
    epsilon = p.epsilon
    factor = cholesky(
        gram + epsilon * np.eye(n),
        context=f"{p.kernel.to_text()} gram + eps I",
    )
    L = factor.L
    f = L @ p.eta + p.beta
    signs = 2 * y.astype(float) - 1
    likelihood = float(np.sum(log_sigmoid(model.sigmoid, signs * f)))
    d_f = signs * d_log_sigmoid(model.sigmoid, signs * f)

    d_beta += float(np.sum(d_f))
    d_eta += L.T @ d_f
    # Reverse-mode Cholesky: sensitivity of the covariance from dL = tril(g eta^T)
    d_L = np.tril(np.outer(d_f, p.eta))
    P = _phi_lower(L.T @ d_L)
    left = linalg.solve_triangular(L, P, lower=True, trans="T")
    sensitivity = linalg.solve_triangular(L, left.T, lower=True, trans="T").T
    d_cov = 0.5 * (sensitivity + sensitivity.T)
    for i, derivative in enumerate(gram_derivatives):
        d_theta[i] += float(np.sum(d_cov * derivative))
    d_eps += epsilon * float(np.trace(d_cov))

    gradient = np.concatenate([d_theta, [d_eps, d_beta], d_eta])
    if not np.all(np.isfinite(gradient)):
        error_msg = f"Non-finite gradient for kernel {p.kernel.to_text()}."
        raise NonFiniteGradientError(error_msg)
    return prior + likelihood, gradient


def grad_log_joint_continuous(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    pcfg: PcfgConfig | None,
    model: ModelConfig,
) -> np.ndarray:
    """Gradient of the log-joint with the kernel structure held fixed.

    Parameters
    ----------
    p : Particle
        Particle, with one eta entry per row of X.
    X : np.ndarray
        n x d inputs.
    y : np.ndarray
        Labels in {0, 1}.
    pcfg : PcfgConfig | None
        Kernel grammar, irrelevant to the gradient.
    model : ModelConfig
        Likelihood and noise prior settings.

    Returns
    -------
    np.ndarray
        Gradient ordered as (theta_u, eps_u, beta, eta).
    """
    return log_joint_and_gradient(p, X, y, pcfg, model)[1]
