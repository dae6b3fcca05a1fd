"""Weighted particle sets and their serialization."""

from collections import Counter
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from gpc_discovery.core.model import Particle
from gpc_discovery.core.numerics import ess_from_log_weights, normalized_weights
from gpc_discovery.exceptions import EmptyParticleSetError, ShapeMismatchError
from gpc_discovery.kernels.expressions import (
    kernel_from_dict,
    kernel_to_json,
    parse_kernel,
)
from gpc_discovery.kernels.grammar import PcfgConfig, kernel_log_prior


@dataclass(frozen=True, eq=False)
class ParticleSet:
    """M weighted particles conditioned on the same data.

    Parameters
    ----------
    particles : list[Particle]
        Particles, all with `absorbed` eta entries.
    absorbed : int
        Number of data points conditioned on so far.
    log_marginal_estimate : float, optional
        Running estimate of the log marginal likelihood., by default 0.0
    """

    particles: list[Particle]
    absorbed: int
    log_marginal_estimate: float = field(default=0.0)

    def __post_init__(self) -> None:
        """Check the set's invariants.

        Raises
        ------
        EmptyParticleSetError
            If there is no particle.
        ShapeMismatchError
            If a particle's eta length differs from absorbed.
        """
        if not self.particles:
            error_msg = "A particle set needs at least one particle."
            raise EmptyParticleSetError(error_msg)
        for i, particle in enumerate(self.particles):
            if particle.n_aux != self.absorbed:
                error_msg = (
                    f"Particle {i} has {particle.n_aux} latent values, "
                    f"expected {self.absorbed}."
                )
                raise ShapeMismatchError(error_msg)

    def __len__(self) -> int:
        """Number of particles.

        Returns
        -------
        int
            M.
        """
        return len(self.particles)

    @property
    def log_weights(self) -> np.ndarray:
        """Log-weights of the particles."""
        return np.array([p.log_weight for p in self.particles])

    @property
    def weights(self) -> np.ndarray:
        """Normalized weights of the particles."""
        return normalized_weights(self.log_weights)

    @property
    def ess(self) -> float:
        """Effective sample size, dead particles count as zero weight."""
        return ess_from_log_weights(self.log_weights)

    @property
    def structures(self) -> list[str]:
        """Text form of every particle's kernel."""
        return [p.kernel.to_text() for p in self.particles]

    def structure_frequencies(self) -> dict[str, float]:
        """Posterior mass of each structure.

        Returns
        -------
        dict[str, float]
            Structure text -> sum of the normalized weights of its particles.
        """
        masses: Counter = Counter()
        for structure, weight in zip(self.structures, self.weights):
            masses[structure] += float(weight)
        return dict(masses.most_common())

    def is_identical(self, other: "ParticleSet") -> bool:
        """Bitwise equality with another set.

        Parameters
        ----------
        other : ParticleSet
            Set to compare to.

        Returns
        -------
        bool
            True if every particle and counter is exactly equal.
        """
        return (
            len(self) == len(other)
            and self.absorbed == other.absorbed
            and self.log_marginal_estimate == other.log_marginal_estimate
            and all(
                p.is_identical(q) for p, q in zip(self.particles, other.particles)
            )
        )

    def to_dict(
        self,
        include_eta: bool = False,
        pcfg: PcfgConfig | None = None,
    ) -> dict[str, Any]:
        """Set as a JSON-serializable dictionnary.

        Parameters
        ----------
        include_eta : bool, optional
            Whether to store eta, required for exact restoration., by default False
        pcfg : PcfgConfig | None, optional
            Grammar used to report each structure's log-prior., by default None

        Returns
        -------
        dict[str, Any]
            Counters and one dictionnary per particle.
        """
        return {
            "absorbed": self.absorbed,
            "log_marginal_estimate": self.log_marginal_estimate,
            "particles": [
                particle_to_dict(p, include_eta=include_eta, pcfg=pcfg)
                for p in self.particles
            ],
        }

    @classmethod
    def from_dict(cls, content: dict[str, Any]) -> "ParticleSet":
        """Restore a set saved with include_eta=True.

        Parameters
        ----------
        content : dict[str, Any]
            Output of to_dict.

        Returns
        -------
        ParticleSet
            Restored set.
        """
        return cls(
            particles=[particle_from_dict(p) for p in content["particles"]],
            absorbed=int(content["absorbed"]),
            log_marginal_estimate=float(content["log_marginal_estimate"]),
        )


def particle_to_dict(
    p: Particle,
    include_eta: bool = False,
    pcfg: PcfgConfig | None = None,
) -> dict[str, Any]:
    """Particle as a JSON-serializable dictionnary.

    Parameters
    ----------
    p : Particle
        Particle.
    include_eta : bool, optional
        Whether to store eta., by default False
    pcfg : PcfgConfig | None, optional
        Grammar used to report the structure's log-prior., by default None

    Returns
    -------
    dict[str, Any]
        Structure, constrained parameters, unconstrained coordinates, weight.
    """
    log_prior = None if pcfg is None else kernel_log_prior(p.kernel, pcfg)
    content = kernel_to_json(p.kernel, p.params, log_prior)
    content.update(
        {
            "theta_u": p.theta_u.tolist(),
            "epsilon": p.epsilon,
            "eps_u": p.eps_u,
            "beta": p.beta,
            "log_weight": p.log_weight,
        },
    )
    if include_eta:
        content["eta"] = p.eta.tolist()
    return content


def particle_from_dict(content: dict[str, Any]) -> Particle:
    """Rebuild a particle from its dictionnary form.

    Parameters
    ----------
    content : dict[str, Any]
        Output of particle_to_dict with include_eta=True.

    Returns
    -------
    Particle
        Restored particle.
    """
    if "tree" in content:
        kernel = kernel_from_dict(content["tree"])
    else:
        kernel = parse_kernel(content["structure"])
    return Particle(
        kernel=kernel,
        theta_u=np.array(content["theta_u"], dtype=float),
        eps_u=float(content["eps_u"]),
        beta=float(content["beta"]),
        eta=np.array(content.get("eta", []), dtype=float),
        log_weight=float(content["log_weight"]),
    )
