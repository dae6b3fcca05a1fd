"""Shared fixtures."""

import numpy as np
import pytest

from gpc_discovery.core.datasets import Dataset
from gpc_discovery.core.model import ModelConfig, Particle
from gpc_discovery.inference.config import HmcConfig, SmcConfig
from gpc_discovery.kernels.expressions import parse_kernel
from gpc_discovery.kernels.grammar import PcfgConfig
from gpc_discovery.verbose import NumericsMonitor, set_verbose_level


@pytest.fixture(autouse=True)
def _silent():
    set_verbose_level(0)
    NumericsMonitor().reset()
    yield
    set_verbose_level(0)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture()
def small_dataset() -> Dataset:
    x1 = np.linspace(-2, 2, 12)
    x2 = np.cos(np.arange(12))
    X = np.column_stack([x1, x2])
    y = (x1 > 0).astype(int)
    return Dataset(X, y, ["x1", "x2"])


@pytest.fixture()
def pcfg() -> PcfgConfig:
    return PcfgConfig(max_depth=3)


@pytest.fixture()
def model() -> ModelConfig:
    return ModelConfig()


@pytest.fixture()
def smc_cfg() -> SmcConfig:
    return SmcConfig(
        num_particles=4,
        n_reju=1,
        hmc=HmcConfig(step_size=0.01, leapfrog_steps=3),
        rng_seed=7,
    )


@pytest.fixture()
def make_particle():
    """Build a particle with a given kernel, eta drawn from a seeded stream."""

    def build(
        text: str,
        n: int,
        seed: int = 0,
        eps: float = 0.1,
        beta: float = 0.3,
    ) -> Particle:
        kernel = parse_kernel(text)
        draws = np.random.default_rng(seed)
        return Particle(
            kernel=kernel,
            theta_u=0.3 * draws.standard_normal(kernel.param_dim),
            eps_u=float(np.log(eps)),
            beta=beta,
            eta=draws.standard_normal(n),
        )

    return build
