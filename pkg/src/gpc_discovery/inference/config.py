"""Settings of the SMC sampler and of its rejuvenation moves."""

from dataclasses import dataclass, field

from gpc_discovery.exceptions import ConfigurationError
from gpc_discovery.kernels.expressions import KernelExpression, parse_kernel


@dataclass(frozen=True)
class HmcConfig:
    """Hamiltonian Monte Carlo settings.

    Parameters
    ----------
    step_size : float, optional
        Leapfrog step size., by default 0.02
    leapfrog_steps : int, optional
        Number of leapfrog steps per trajectory., by default 20
    mass : float, optional
        Diagonal mass, shared by every coordinate., by default 1.0
    """

    step_size: float = 0.02
    leapfrog_steps: int = 20
    mass: float = 1.0

    def __post_init__(self) -> None:
        """Validate the settings."""
        if self.step_size < 0:
            error_msg = f"step_size must be non-negative, got {self.step_size}."
            raise ConfigurationError(error_msg)
        if self.leapfrog_steps < 1:
            error_msg = f"leapfrog_steps must be positive, got {self.leapfrog_steps}."
            raise ConfigurationError(error_msg)
        if self.mass <= 0:
            error_msg = f"mass must be positive, got {self.mass}."
            raise ConfigurationError(error_msg)


@dataclass(frozen=True)
class StructureMoveConfig:
    """Mix of structure proposals.

    Parameters
    ----------
    subtree_replace : float, optional
        Probability of a Subtree-Replace proposal., by default 0.5
    detach_attach : float, optional
        Probability of a Detach-Attach proposal., by default 0.5
    """

    subtree_replace: float = 0.5
    detach_attach: float = 0.5

    def __post_init__(self) -> None:
        """Validate the probabilities."""
        if self.subtree_replace < 0 or self.detach_attach < 0:
            error_msg = "Structure move probabilities must be non-negative."
            raise ConfigurationError(error_msg)
        if abs(self.subtree_replace + self.detach_attach - 1) > 1e-9:
            error_msg = "Structure move probabilities must sum to 1."
            raise ConfigurationError(error_msg)


@dataclass(frozen=True)
class SmcConfig:
    """Sequential Monte Carlo settings.

    Parameters
    ----------
    num_particles : int, optional
        Number of particles M., by default 8
    n_reju : int, optional
        Number of rejuvenation sweeps after each batch., by default 3
    ess_threshold_frac : float, optional
        Resampling happens when ESS < ess_threshold_frac * M., by default 0.5
    batch_size : int, optional
        Number of data points absorbed per step., by default 1
    hmc : HmcConfig, optional
        HMC settings., by default HmcConfig()
    structure_moves : StructureMoveConfig, optional
        Structure proposal mix., by default StructureMoveConfig()
    rng_seed : int, optional
        Root seed of every random stream., by default 0
    fixed_kernel : KernelExpression | None, optional
        If set, every particle uses this structure and no structure move is
        made., by default None
    n_workers : int, optional
        Number of threads for the particle-parallel phases., by default 1
    """

    num_particles: int = 8
    n_reju: int = 3
    ess_threshold_frac: float = 0.5
    batch_size: int = 1
    hmc: HmcConfig = field(default_factory=HmcConfig)
    structure_moves: StructureMoveConfig = field(default_factory=StructureMoveConfig)
    rng_seed: int = 0
    fixed_kernel: KernelExpression | None = None
    n_workers: int = 1

    def __post_init__(self) -> None:
        """Validate the settings."""
        if self.num_particles < 1:
            error_msg = f"num_particles must be positive, got {self.num_particles}."
            raise ConfigurationError(error_msg)
        if self.n_reju < 0:
            error_msg = f"n_reju must be non-negative, got {self.n_reju}."
            raise ConfigurationError(error_msg)
        if not 0 < self.ess_threshold_frac <= 1:
            error_msg = (
                f"ess_threshold_frac must be in (0, 1], got {self.ess_threshold_frac}."
            )
            raise ConfigurationError(error_msg)
        if self.batch_size < 1:
            error_msg = f"batch_size must be positive, got {self.batch_size}."
            raise ConfigurationError(error_msg)
        if self.rng_seed < 0:
            error_msg = f"rng_seed must be non-negative, got {self.rng_seed}."
            raise ConfigurationError(error_msg)
        if self.n_workers < 1:
            error_msg = f"n_workers must be positive, got {self.n_workers}."
            raise ConfigurationError(error_msg)

    def to_dict(self) -> dict:
        """Configuration as a dictionnary.

        Returns
        -------
        dict
            Field name -> value, nested settings as dictionnaries.
        """
        return {
            "num_particles": self.num_particles,
            "n_reju": self.n_reju,
            "ess_threshold_frac": self.ess_threshold_frac,
            "batch_size": self.batch_size,
            "hmc": {
                "step_size": self.hmc.step_size,
                "leapfrog_steps": self.hmc.leapfrog_steps,
                "mass": self.hmc.mass,
            },
            "structure_moves": {
                "subtree_replace": self.structure_moves.subtree_replace,
                "detach_attach": self.structure_moves.detach_attach,
            },
            "rng_seed": self.rng_seed,
            "fixed_kernel": (
                None if self.fixed_kernel is None else self.fixed_kernel.to_text()
            ),
            "n_workers": self.n_workers,
        }

    @classmethod
    def from_dict(cls, content: dict) -> "SmcConfig":
        """Build the configuration from its dictionnary form.

        Parameters
        ----------
        content : dict
            Output of to_dict, missing keys take their default value.

        Returns
        -------
        SmcConfig
            Configuration.
        """
        content = dict(content)
        if "hmc" in content:
            content["hmc"] = HmcConfig(**content["hmc"])
        if "structure_moves" in content:
            content["structure_moves"] = StructureMoveConfig(
                **content["structure_moves"],
            )
        if content.get("fixed_kernel") is not None:
            content["fixed_kernel"] = parse_kernel(content["fixed_kernel"])
        return cls(**content)
