"""Sequential Monte Carlo inference."""

from gpc_discovery.inference.checkpoint import Checkpoint
from gpc_discovery.inference.config import HmcConfig, SmcConfig, StructureMoveConfig
from gpc_discovery.inference.moves import (
    MoveStatistics,
    hmc_step,
    imcmc_structure_step,
    rejuvenate,
    reweight,
)
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.inference.smc import (
    SmcSampler,
    StepDiagnostics,
    maybe_resample,
    run_smc,
)

__all__ = [
    "Checkpoint",
    "HmcConfig",
    "MoveStatistics",
    "ParticleSet",
    "SmcConfig",
    "SmcSampler",
    "StepDiagnostics",
    "StructureMoveConfig",
    "hmc_step",
    "imcmc_structure_step",
    "maybe_resample",
    "rejuvenate",
    "reweight",
    "run_smc",
]
