"""Resumable state of a SMC run."""

from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from gpc_discovery.core.datasets import Dataset, Standardizer
from gpc_discovery.core.model import ModelConfig
from gpc_discovery.exceptions import CheckpointLoadingError
from gpc_discovery.inference.config import SmcConfig
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.inference.smc import SmcSampler
from gpc_discovery.kernels.grammar import PcfgConfig

CHECKPOINT_VERSION = 1


@dataclass(eq=False)
class Checkpoint:
    """Everything needed to predict with, or resume, a SMC run.

    Parameters
    ----------
    particle_set : ParticleSet
        Particles, eta included.
    pcfg : PcfgConfig
        Kernel grammar.
    smc : SmcConfig
        Sampler settings.
    model : ModelConfig
        Likelihood settings.
    step : int
        Index of the last completed step.
    train : Dataset | None
        Every (standardized) data point the particles are conditioned on.
    standardizer : Standardizer, optional
        Statistics applied to raw features., by default unfitted.
    """

    particle_set: ParticleSet
    pcfg: PcfgConfig
    smc: SmcConfig
    model: ModelConfig
    step: int
    train: Dataset | None
    standardizer: Standardizer = field(default_factory=Standardizer)

    @property
    def next_step(self) -> int:
        """Index of the step a resumed run starts with."""
        return self.step + 1

    @property
    def X_train(self) -> np.ndarray:
        """Training inputs, empty if no point was absorbed."""
        if self.train is None:
            return np.zeros((0, 0))
        return self.train.X

    @classmethod
    def from_sampler(
        cls,
        sampler: SmcSampler,
        standardizer: Standardizer | None = None,
        feature_names: list[str] | None = None,
    ) -> "Checkpoint":
        """Snapshot the current state of a sampler.

        Parameters
        ----------
        sampler : SmcSampler
            Sampler to snapshot.
        standardizer : Standardizer | None, optional
            Statistics applied to the sampler's data., by default None
        feature_names : list[str] | None, optional
            Names of the features., by default None

        Returns
        -------
        Checkpoint
            Snapshot sharing the sampler's immutable particles.
        """
        train = sampler.absorbed_data
        if train is not None and feature_names is not None:
            train = Dataset(train.X, train.y, feature_names)
        return cls(
            particle_set=sampler.particle_set,
            pcfg=sampler.pcfg,
            smc=sampler.cfg,
            model=sampler.model,
            step=sampler.step,
            train=train,
            standardizer=Standardizer() if standardizer is None else standardizer,
        )

    def to_sampler(
        self,
        checkpoint_writer: Callable[[SmcSampler], Path] | None = None,
    ) -> SmcSampler:
        """Sampler resuming from this state.

        Parameters
        ----------
        checkpoint_writer : Callable[[SmcSampler], Path] | None, optional
            Writer called if the resumed run aborts., by default None

        Returns
        -------
        SmcSampler
            Restored sampler, next absorb call runs step next_step.
        """
        sampler = SmcSampler(self.pcfg, self.smc, self.model, checkpoint_writer)
        sampler.restore(self.particle_set, self.train, self.step)
        return sampler

    def to_dict(self) -> dict[str, Any]:
        """State as a JSON-serializable dictionnary.

        Returns
        -------
        dict[str, Any]
            Configuration, particles with eta, training data and statistics.
        """
        train = None
        if self.train is not None:
            train = {
                "X": self.train.X.tolist(),
                "y": self.train.y.tolist(),
                "feature_names": self.train.feature_names,
            }
        return {
            "version": CHECKPOINT_VERSION,
            "pcfg": self.pcfg.to_dict(),
            "smc": self.smc.to_dict(),
            "model": self.model.to_dict(),
            "step": self.step,
            "next_step": self.next_step,
            "particle_set": self.particle_set.to_dict(include_eta=True),
            "train": train,
            "standardizer": self.standardizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, content: dict[str, Any]) -> "Checkpoint":
        """Restore a state from its dictionnary form.

        Parameters
        ----------
        content : dict[str, Any]
            Output of to_dict.

        Returns
        -------
        Checkpoint
            Restored state.

        Raises
        ------
        CheckpointLoadingError
            If a key is missing or the particles don't match the training data.
        """
        try:
            particle_set = ParticleSet.from_dict(content["particle_set"])
            train = None
            if content["train"] is not None:
                train = Dataset(
                    np.array(content["train"]["X"], dtype=float),
                    np.array(content["train"]["y"], dtype=int),
                    content["train"].get("feature_names"),
                )
            checkpoint = cls(
                particle_set=particle_set,
                pcfg=PcfgConfig.from_dict(content["pcfg"]),
                smc=SmcConfig.from_dict(content["smc"]),
                model=ModelConfig.from_dict(content["model"]),
                step=int(content["step"]),
                train=train,
                standardizer=Standardizer.from_dict(content.get("standardizer", {})),
            )
        except (KeyError, TypeError) as error:
            error_msg = f"Incomplete checkpoint: {error}."
            raise CheckpointLoadingError(error_msg) from error
        n_train = 0 if train is None else train.n
        if particle_set.absorbed != n_train:
            error_msg = (
                f"Particles absorbed {particle_set.absorbed} points, "
                f"the checkpoint stores {n_train}."
            )
            raise CheckpointLoadingError(error_msg)
        return checkpoint
