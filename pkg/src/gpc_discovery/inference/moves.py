"""Reweighting and rejuvenation moves applied to single particles.

Rejuvenation alternates an involutive structure move on (k, theta) with a
Hamiltonian move on the continuous coordinates (theta, eps, beta, eta).
Both leave the posterior given the absorbed data invariant.
"""

from collections.abc import Callable
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.stats import norm

from gpc_discovery.core.model import (
    ModelConfig,
    Particle,
    latent_f,
    log_joint,
    log_joint_and_gradient,
    log_likelihood_pointwise,
)
from gpc_discovery.exceptions import (
    KernelDepthError,
    NegativeVarianceError,
    NonFiniteGradientError,
    NonPositiveDefiniteError,
)
from gpc_discovery.inference.config import SmcConfig
from gpc_discovery.kernels.expressions import KernelExpression, Operator
from gpc_discovery.kernels.grammar import PcfgConfig, kernel_log_prior, sample_kernel
from gpc_discovery.kernels.surgery import (
    TreePath,
    detach_reattach,
    get_subtree,
    list_subtrees,
    reduced_tree,
    remap_params,
    replace_subtree,
    subtree_param_slice,
)
from gpc_discovery.verbose import NumericsMonitor

NUMERICAL_FAILURES = (
    NonPositiveDefiniteError,
    NonFiniteGradientError,
    NegativeVarianceError,
    FloatingPointError,
)


@dataclass
class MoveStatistics:
    """Counters of proposed and accepted moves."""

    subtree_replace_proposed: int = 0
    subtree_replace_accepted: int = 0
    detach_attach_proposed: int = 0
    detach_attach_accepted: int = 0
    hmc_proposed: int = 0
    hmc_accepted: int = 0
    divergences: int = 0
    flagged_weights: int = 0

    @property
    def structure_proposed(self) -> int:
        """Number of structure proposals."""
        return self.subtree_replace_proposed + self.detach_attach_proposed

    @property
    def structure_accepted(self) -> int:
        """Number of accepted structure proposals."""
        return self.subtree_replace_accepted + self.detach_attach_accepted

    @property
    def structure_acceptance_rate(self) -> float | None:
        """Fraction of accepted structure proposals, None if none was made."""
        if self.structure_proposed == 0:
            return None
        return self.structure_accepted / self.structure_proposed

    @property
    def hmc_acceptance_rate(self) -> float | None:
        """Fraction of accepted HMC trajectories, None if none was made."""
        if self.hmc_proposed == 0:
            return None
        return self.hmc_accepted / self.hmc_proposed

    def merge(self, other: "MoveStatistics") -> None:
        """Add another accumulator's counts to this one.

        Parameters
        ----------
        other : MoveStatistics
            Counts to add.
        """
        for counter in fields(self):
            name = counter.name
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def to_dict(self) -> dict:
        """Counters and rates as a dictionnary.

        Returns
        -------
        dict
            Counter name -> value.
        """
        content = {field.name: getattr(self, field.name) for field in fields(self)}
        content["structure_acceptance_rate"] = self.structure_acceptance_rate
        content["hmc_acceptance_rate"] = self.hmc_acceptance_rate
        return content


def reweight_increment(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    new_batch: slice,
    model: ModelConfig,
    form: str = "conditional",
) -> float:
    """Log incremental weight for a newly absorbed batch.

    Parameters
    ----------
    p : Particle
        Particle whose eta already covers every row of X.
    X : np.ndarray
        Inputs absorbed so far, new batch included.
    y : np.ndarray
        Labels absorbed so far, new batch included.
    new_batch : slice
        Rows of the new batch, at the end of X.
    model : ModelConfig
        Likelihood settings.
    form : str, optional
        'conditional': log-likelihood of the new labels given the extended
        latent values. 'ratio': difference of log-joints minus the log-prior
        of the new eta entries., by default "conditional"

    Returns
    -------
    float
        Increment, -inf if it is not finite or the covariance is singular.
    """
    start = new_batch.start or 0
    if start == X.shape[0]:
        return 0.0
    try:
        if form == "conditional":
            f = latent_f(p, X)
            pointwise = log_likelihood_pointwise(
                f[new_batch],
                y[new_batch],
                model.sigmoid,
            )
            increment = float(np.sum(pointwise))
        else:
            previous = replace(p, eta=p.eta[:start])
            current = log_joint(p, X, y, None, model)
            before = log_joint(previous, X[:start], y[:start], None, model)
            new_eta_prior = float(np.sum(norm.logpdf(p.eta[new_batch])))
            increment = current - before - new_eta_prior
    except NonPositiveDefiniteError:
        return -np.inf
    if not np.isfinite(increment):
        return -np.inf
    return increment


def reweight(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    new_batch: slice,
    model: ModelConfig | None = None,
    stats: MoveStatistics | None = None,
) -> Particle:
    """Update a particle's log-weight after absorbing a batch.

    Parameters
    ----------
    p : Particle
        Particle whose eta already covers every row of X.
    X : np.ndarray
        Inputs absorbed so far, new batch included.
    y : np.ndarray
        Labels absorbed so far, new batch included.
    new_batch : slice
        Rows of the new batch.
    model : ModelConfig | None, optional
        Likelihood settings, defaults if None., by default None
    stats : MoveStatistics | None, optional
        Accumulator counting flagged weights., by default None

    Returns
    -------
    Particle
        Particle with log_weight increased by the increment, -inf if flagged.
    """
    model = ModelConfig() if model is None else model
    if p.log_weight == -np.inf:
        return p
    increment = reweight_increment(p, X, y, new_batch, model)
    if increment == -np.inf and stats is not None:
        stats.flagged_weights += 1
    return p.with_weight(p.log_weight + increment)


def _safe_log_joint(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    pcfg: PcfgConfig | None,
    model: ModelConfig,
) -> float:
    try:
        value = log_joint(p, X, y, pcfg, model)
    except (*NUMERICAL_FAILURES, KernelDepthError):
        return -np.inf
    return value if np.isfinite(value) else -np.inf


def _structure_type_probability(k: KernelExpression, probability: float) -> float:
    """Probability of choosing Subtree-Replace, forced on leaves."""
    return 1.0 if k.is_leaf else probability


def subtree_replace_log_ratio(
    p: Particle,
    path: TreePath,
    new_subtree: KernelExpression,
    fresh: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    pcfg: PcfgConfig,
    cfg: SmcConfig,
    model: ModelConfig,
    current_log_joint: float | None = None,
) -> tuple[Particle, float]:
    """Proposal and log acceptance ratio of a Subtree-Replace move.

    Parameters
    ----------
    p : Particle
        Current particle.
    path : TreePath
        Path of the replaced subtree.
    new_subtree : KernelExpression
        Replacement drawn from the grammar at the subtree's depth.
    fresh : np.ndarray
        Unconstrained parameters of the replacement.
    X : np.ndarray
        Absorbed inputs.
    y : np.ndarray
        Absorbed labels.
    pcfg : PcfgConfig
        Kernel grammar.
    cfg : SmcConfig
        Sampler settings, for the move mix.
    model : ModelConfig
        Likelihood and noise prior settings.
    current_log_joint : float | None, optional
        Log-joint of p if already known., by default None

    Returns
    -------
    tuple[Particle, float]
        Proposed particle and log acceptance ratio.
    """
    k = p.kernel
    depth = len(path) + 1
    old_subtree = get_subtree(k, path)
    removed = p.theta_u[subtree_param_slice(k, path)]
    result = replace_subtree(k, path, new_subtree, max_depth=pcfg.max_depth)
    new_theta = remap_params(p.theta_u, result.index_map, fresh)
    proposal = replace(p, kernel=result.expression, theta_u=new_theta)

    p_sr = cfg.structure_moves.subtree_replace
    forward_type = _structure_type_probability(k, p_sr)
    backward_type = _structure_type_probability(proposal.kernel, p_sr)
    if forward_type == 0 or backward_type == 0:
        return proposal, -np.inf
    forward = (
        np.log(forward_type)
        - np.log(k.size)
        + kernel_log_prior(new_subtree, pcfg, depth)
        + np.sum(norm.logpdf(fresh))
    )
    backward = (
        np.log(backward_type)
        - np.log(proposal.kernel.size)
        + kernel_log_prior(old_subtree, pcfg, depth)
        + np.sum(norm.logpdf(removed))
    )
    if current_log_joint is None:
        current_log_joint = _safe_log_joint(p, X, y, pcfg, model)
    proposed_log_joint = _safe_log_joint(proposal, X, y, pcfg, model)
    if proposed_log_joint == -np.inf:
        return proposal, -np.inf
    log_ratio = proposed_log_joint - current_log_joint + backward - forward
    return proposal, float(log_ratio)


def detach_attach_log_ratio(
    p: Particle,
    detach_path: TreePath,
    attach_path: TreePath,
    op: Operator,
    side: int,
    X: np.ndarray,
    y: np.ndarray,
    pcfg: PcfgConfig,
    model: ModelConfig,
    current_log_joint: float | None = None,
) -> tuple[Particle | None, float]:
    """Proposal and log acceptance ratio of a Detach-Attach move.

    The move is its own inverse: the reverse move detaches the moved subtree
    and reattaches it where it was, with the same proposal probability. The
    parameters are permuted so the ratio reduces to the log-joints' ratio.

    Parameters
    ----------
    p : Particle
        Current particle, its kernel must not be a leaf.
    detach_path : TreePath
        Path of the moved subtree.
    attach_path : TreePath
        Path of the attachment node in the reduced tree.
    op : Operator
        Operator of the new parent.
    side : int
        Side of the moved subtree under its new parent.
    X : np.ndarray
        Absorbed inputs.
    y : np.ndarray
        Absorbed labels.
    pcfg : PcfgConfig
        Kernel grammar.
    model : ModelConfig
        Likelihood and noise prior settings.
    current_log_joint : float | None, optional
        Log-joint of p if already known., by default None

    Returns
    -------
    tuple[Particle | None, float]
        Proposed particle, None if the result is too deep, and log ratio.
    """
    try:
        result = detach_reattach(
            p.kernel,
            detach_path,
            attach_path,
            op=op,
            side=side,
            max_depth=pcfg.max_depth,
        )
    except KernelDepthError:
        return None, -np.inf
    new_theta = remap_params(p.theta_u, result.index_map, np.zeros(0))
    proposal = replace(p, kernel=result.expression, theta_u=new_theta)
    if current_log_joint is None:
        current_log_joint = _safe_log_joint(p, X, y, pcfg, model)
    proposed_log_joint = _safe_log_joint(proposal, X, y, pcfg, model)
    if proposed_log_joint == -np.inf:
        return proposal, -np.inf
    return proposal, float(proposed_log_joint - current_log_joint)


def _accept(log_ratio: float, rng: np.random.Generator) -> bool:
    acceptance = np.exp(min(0.0, log_ratio))
    return bool(rng.uniform() < acceptance)


def imcmc_structure_step(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    pcfg: PcfgConfig,
    cfg: SmcConfig,
    rng: np.random.Generator,
    model: ModelConfig | None = None,
    stats: MoveStatistics | None = None,
) -> Particle:
    """One involutive MCMC move on the kernel structure and its parameters.

    Parameters
    ----------
    p : Particle
        Current particle.
    X : np.ndarray
        Absorbed inputs.
    y : np.ndarray
        Absorbed labels.
    pcfg : PcfgConfig
        Kernel grammar.
    cfg : SmcConfig
        Sampler settings.
    rng : np.random.Generator
        Random stream.
    model : ModelConfig | None, optional
        Likelihood settings, defaults if None., by default None
    stats : MoveStatistics | None, optional
        Accumulator of acceptance counts., by default None

    Returns
    -------
    Particle
        Accepted proposal, or p itself if rejected.
    """
    model = ModelConfig() if model is None else model
    stats = MoveStatistics() if stats is None else stats
    k = p.kernel
    current = _safe_log_joint(p, X, y, pcfg, model)
    use_subtree_replace = k.is_leaf or (
        rng.uniform() < cfg.structure_moves.subtree_replace
    )
    if use_subtree_replace:
        stats.subtree_replace_proposed += 1
        paths = list_subtrees(k)
        path = paths[rng.integers(len(paths))]
        new_subtree = sample_kernel(pcfg, rng, start_depth=len(path) + 1)
        fresh = rng.standard_normal(new_subtree.param_dim)
        proposal, log_ratio = subtree_replace_log_ratio(
            p, path, new_subtree, fresh, X, y, pcfg, cfg, model, current
        )
        if _accept(log_ratio, rng):
            stats.subtree_replace_accepted += 1
            return proposal
        return p
    stats.detach_attach_proposed += 1
    detach_paths = list_subtrees(k)[1:]
    detach_path = detach_paths[rng.integers(len(detach_paths))]
    attach_paths = list_subtrees(reduced_tree(k, detach_path))
    attach_path = attach_paths[rng.integers(len(attach_paths))]
    op = list(Operator)[rng.integers(2)]
    side = int(rng.integers(2))
    proposal, log_ratio = detach_attach_log_ratio(
        p, detach_path, attach_path, op, side, X, y, pcfg, model, current
    )
    if proposal is not None and _accept(log_ratio, rng):
        stats.detach_attach_accepted += 1
        return proposal
    return p


def hamiltonian(log_density: float, momentum: np.ndarray, mass: float) -> float:
    """Total energy of a state.

    Parameters
    ----------
    log_density : float
        Log target density at the position.
    momentum : np.ndarray
        Momentum.
    mass : float
        Diagonal mass.

    Returns
    -------
    float
        -log_density + |momentum|^2 / (2 mass).
    """
    return float(-log_density + 0.5 * np.dot(momentum, momentum) / mass)


def leapfrog(
    position: np.ndarray,
    momentum: np.ndarray,
    gradient: np.ndarray,
    value_and_gradient: Callable[[np.ndarray], tuple[float, np.ndarray]],
    step_size: float,
    n_steps: int,
    mass: float,
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Leapfrog integration of Hamilton's equations.

    Parameters
    ----------
    position : np.ndarray
        Initial position.
    momentum : np.ndarray
        Initial momentum.
    gradient : np.ndarray
        Gradient of the log-density at the initial position.
    value_and_gradient : Callable[[np.ndarray], tuple[float, np.ndarray]]
        Log-density and its gradient at a position.
    step_size : float
        Step size.
    n_steps : int
        Number of steps.
    mass : float
        Diagonal mass.

    Returns
    -------
    tuple[np.ndarray, np.ndarray, float, np.ndarray]
        Final position, momentum, log-density and gradient.
    """
    position = position.copy()
    momentum = momentum + 0.5 * step_size * gradient
    value = np.nan
    for step in range(n_steps):
        position = position + step_size * momentum / mass
        value, gradient = value_and_gradient(position)
        if step < n_steps - 1:
            momentum = momentum + step_size * gradient
    momentum = momentum + 0.5 * step_size * gradient
    return position, momentum, value, gradient


def hmc_step(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    cfg: SmcConfig,
    rng: np.random.Generator,
    model: ModelConfig | None = None,
    stats: MoveStatistics | None = None,
) -> Particle:
    """One Hamiltonian Monte Carlo move on the continuous coordinates.

    Parameters
    ----------
    p : Particle
        Current particle.
    X : np.ndarray
        Absorbed inputs.
    y : np.ndarray
        Absorbed labels.
    cfg : SmcConfig
        Sampler settings.
    rng : np.random.Generator
        Random stream.
    model : ModelConfig | None, optional
        Likelihood settings, defaults if None., by default None
    stats : MoveStatistics | None, optional
        Accumulator of acceptance and divergence counts., by default None

    Returns
    -------
    Particle
        Accepted proposal, or p itself if rejected.
    """
    model = ModelConfig() if model is None else model
    stats = MoveStatistics() if stats is None else stats
    hmc = cfg.hmc
    stats.hmc_proposed += 1

    def value_and_gradient(position: np.ndarray) -> tuple[float, np.ndarray]:
        return log_joint_and_gradient(p.with_continuous(position), X, y, None, model)

    position = p.continuous
    value, gradient = value_and_gradient(position)
    momentum = rng.normal(0.0, np.sqrt(hmc.mass), size=position.shape[0])
    initial_energy = hamiltonian(value, momentum, hmc.mass)
    try:
        new_position, new_momentum, new_value, _ = leapfrog(
            position,
            momentum,
            gradient,
            value_and_gradient,
            hmc.step_size,
            hmc.leapfrog_steps,
            hmc.mass,
        )
        final_energy = hamiltonian(new_value, new_momentum, hmc.mass)
    except NUMERICAL_FAILURES:
        final_energy = np.nan
    if not np.isfinite(final_energy):
        stats.divergences += 1
        NumericsMonitor().record_divergence()
        return p
    if _accept(initial_energy - final_energy, rng):
        stats.hmc_accepted += 1
        return p.with_continuous(new_position)
    return p


def rejuvenate(
    p: Particle,
    X: np.ndarray,
    y: np.ndarray,
    cfg: SmcConfig,
    rng: np.random.Generator,
    pcfg: PcfgConfig,
    model: ModelConfig | None = None,
    stats: MoveStatistics | None = None,
) -> Particle:
    """n_reju sweeps of a structure move followed by a HMC move.

    Parameters
    ----------
    p : Particle
        Particle to rejuvenate, left untouched if its weight is zero.
    X : np.ndarray
        Absorbed inputs.
    y : np.ndarray
        Absorbed labels.
    cfg : SmcConfig
        Sampler settings, structure moves are skipped for a fixed kernel.
    rng : np.random.Generator
        Random stream.
    pcfg : PcfgConfig
        Kernel grammar.
    model : ModelConfig | None, optional
        Likelihood settings, defaults if None., by default None
    stats : MoveStatistics | None, optional
        Accumulator of move counts., by default None

    Returns
    -------
    Particle
        Rejuvenated particle, with the same weight.
    """
    if p.log_weight == -np.inf:
        return p
    model = ModelConfig() if model is None else model
    stats = MoveStatistics() if stats is None else stats
    for _ in range(cfg.n_reju):
        if cfg.fixed_kernel is None:
            p = imcmc_structure_step(p, X, y, pcfg, cfg, rng, model, stats)
        p = hmc_step(p, X, y, cfg, rng, model, stats)
    return p
