"""
Gaussian Process Classification with kernel discovery, for Python
=================================================================

gpc-discovery is a module to learn binary Gaussian process classifiers whose
kernel structure is learned together with its parameters, offline or from a
stream of data batches.

This module provides tools to:

- Describe kernels as expression trees generated by a probabilistic grammar
- Sample kernel structures, parameters and latent values with Sequential
    Monte Carlo, rejuvenated by structure moves and Hamiltonian Monte Carlo
- Predict class probabilities and evaluate accuracy, offline or online

All docstrings examples will assume that `gpc_discovery`
has been imported as `gpc`:

```
>>> import gpc_discovery as gpc
```

From this namespace are accessible:

- `Checkpoint`              -> Resumable state of a run
- `Dataset`                 -> Features and binary labels
- `ExperimentConfig`        -> Settings of an offline or online experiment
- `KernelExpression`        -> Kernel expression trees
- `ModelConfig`             -> Likelihood and noise prior settings
- `ParticleSet`             -> Weighted particles
- `PcfgConfig`              -> Kernel grammar
- `Predictor`               -> Predictive probabilities of a particle set
- `SmcConfig`               -> Sampler settings
- `SmcSampler`              -> Data-tempered SMC sampler
- `Standardizer`            -> Features standardization
- `ToySpec`                 -> Toy dataset recipe
- `cli`                     -> Command line interface
- `exceptions`              -> Exceptions of the project
- `experiments`             -> Offline and online experiments
- `gen_toy`                 -> Toy dataset generation
- `inference`               -> SMC inference tools
- `io`                      -> Input/Output tools
- `kernels`                 -> Kernel grammar and expressions
- `parse_kernel`            -> Kernel text parser
- `parsers`                 -> Configuration parsing objects
- `prediction`              -> Prediction and metrics
- `run_smc`                 -> Run the sampler over a dataset
- `set_verbose_level`       -> Set the verbose level

"""  # noqa: D205, D400

from pathlib import Path

from gpc_discovery import (
    cli,
    exceptions,
    experiments,
    inference,
    kernels,
    parsers,
    prediction,
)
from gpc_discovery.core import io
from gpc_discovery.core.datasets import Dataset, Standardizer
from gpc_discovery.core.model import ModelConfig
from gpc_discovery.experiments import ExperimentConfig
from gpc_discovery.inference.checkpoint import Checkpoint
from gpc_discovery.inference.config import SmcConfig
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.inference.smc import SmcSampler, run_smc
from gpc_discovery.kernels.expressions import KernelExpression, parse_kernel
from gpc_discovery.kernels.grammar import PcfgConfig
from gpc_discovery.prediction.predictor import Predictor
from gpc_discovery.toy import ToySpec, gen_toy
from gpc_discovery.verbose import set_verbose_level

BASE_DIR = Path(__file__).parent.resolve()

__all__ = [
    "Checkpoint",
    "Dataset",
    "ExperimentConfig",
    "KernelExpression",
    "ModelConfig",
    "ParticleSet",
    "PcfgConfig",
    "Predictor",
    "SmcConfig",
    "SmcSampler",
    "Standardizer",
    "ToySpec",
    "cli",
    "exceptions",
    "experiments",
    "gen_toy",
    "inference",
    "io",
    "kernels",
    "parse_kernel",
    "parsers",
    "prediction",
    "run_smc",
    "set_verbose_level",
]
