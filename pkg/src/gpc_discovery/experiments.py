"""Offline and online classification experiments."""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from time import time
from typing import Any

import numpy as np
from sklearn.model_selection import train_test_split

from gpc_discovery.core.datasets import Dataset, Standardizer
from gpc_discovery.core.io.readers import load_csv
from gpc_discovery.core.io.savers import RunSaver
from gpc_discovery.core.model import ModelConfig
from gpc_discovery.exceptions import ConfigurationError
from gpc_discovery.inference.checkpoint import Checkpoint
from gpc_discovery.inference.config import SmcConfig
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.inference.smc import SmcSampler, StepDiagnostics
from gpc_discovery.kernels.expressions import parse_kernel
from gpc_discovery.kernels.grammar import PcfgConfig
from gpc_discovery.prediction.metrics import Accuracy, online_average_accuracy
from gpc_discovery.prediction.predictor import Predictor
from gpc_discovery.toy import ToySpec, gen_toy
from gpc_discovery.verbose import NumericsMonitor, Verbose

EXPERIMENT_MODES = ("offline", "online")
ONLINE_PROTOCOLS = ("natural_order", "class_biased_first_batch")
ONLINE_EVALUATIONS = ("fixed_test", "prequential")
DEFAULT_BATCH_COUNT = 10


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of an experiment.

    Parameters
    ----------
    mode : str, optional
        'offline' or 'online'., by default "offline"
    data_path : str | None, optional
        Csv dataset, exclusive with toy., by default None
    toy : ToySpec | None, optional
        Toy dataset recipe, exclusive with data_path., by default None
    batch_count : int | None, optional
        Number of batches T the training data is split in, exclusive with
        batch_size. If neither is set, 10 batches are used., by default None
    batch_size : int | None, optional
        Number of points per batch, exclusive with batch_count., by default None
    train_fraction : float, optional
        Fraction of the data used for training., by default 0.8
    split_seed : int, optional
        Seed of the train/test shuffling., by default 0
    stratify : bool, optional
        Whether the split preserves class proportions., by default True
    standardize : bool, optional
        Whether to standardize features with training statistics.
        , by default True
    online_protocol : str, optional
        'natural_order' or 'class_biased_first_batch'., by default "natural_order"
    biased_holdout : int, optional
        Number of class 0 points kept out of a class-biased first batch.
        , by default 0
    online_evaluation : str, optional
        'fixed_test' evaluates on the test split after every batch,
        'prequential' evaluates on the next batch before absorbing it.
        , by default "fixed_test"
    fixed_kernel : str | None, optional
        Kernel expression every particle uses, structure moves are then
        disabled., by default None
    smc : SmcConfig, optional
        Sampler settings., by default SmcConfig()
    pcfg : PcfgConfig, optional
        Kernel grammar., by default PcfgConfig()
    model : ModelConfig, optional
        Likelihood settings., by default ModelConfig()
    output_dir : str, optional
        Directory of the report, predictions and checkpoint., by default "results"
    save_latents : bool, optional
        Whether to add per-particle latent summaries to the predictions csv.
        , by default False
    """

    mode: str = "offline"
    data_path: str | None = None
    toy: ToySpec | None = None
    batch_count: int | None = None
    batch_size: int | None = None
    train_fraction: float = 0.8
    split_seed: int = 0
    stratify: bool = True
    standardize: bool = True
    online_protocol: str = "natural_order"
    biased_holdout: int = 0
    online_evaluation: str = "fixed_test"
    fixed_kernel: str | None = None
    smc: SmcConfig = field(default_factory=SmcConfig)
    pcfg: PcfgConfig = field(default_factory=PcfgConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    output_dir: str = "results"
    save_latents: bool = False

    def __post_init__(self) -> None:
        """Validate the settings and propagate the fixed kernel to the sampler.

        Raises
        ------
        ConfigurationError
            If a value is invalid or exclusive settings are combined.
        """
        if self.mode not in EXPERIMENT_MODES:
            error_msg = f"mode must be one of {EXPERIMENT_MODES}, got '{self.mode}'."
            raise ConfigurationError(error_msg)
        if (self.data_path is None) == (self.toy is None):
            error_msg = "Exactly one of a dataset path and a toy dataset is required."
            raise ConfigurationError(error_msg)
        if self.batch_count is not None and self.batch_size is not None:
            error_msg = "batch_count and batch_size can't be both set."
            raise ConfigurationError(error_msg)
        if self.batch_count is None and self.batch_size is None:
            object.__setattr__(self, "batch_count", DEFAULT_BATCH_COUNT)
        for name in ("batch_count", "batch_size"):
            value = getattr(self, name)
            if value is not None and value < 1:
                error_msg = f"{name} must be positive, got {value}."
                raise ConfigurationError(error_msg)
        if not 0 < self.train_fraction < 1:
            error_msg = f"train_fraction must be in (0, 1), got {self.train_fraction}."
            raise ConfigurationError(error_msg)
        if self.online_protocol not in ONLINE_PROTOCOLS:
            error_msg = (
                f"online_protocol must be one of {ONLINE_PROTOCOLS}, "
                f"got '{self.online_protocol}'."
            )
            raise ConfigurationError(error_msg)
        if self.online_evaluation not in ONLINE_EVALUATIONS:
            error_msg = (
                f"online_evaluation must be one of {ONLINE_EVALUATIONS}, "
                f"got '{self.online_evaluation}'."
            )
            raise ConfigurationError(error_msg)
        if self.biased_holdout < 0:
            error_msg = (
                f"biased_holdout must be non-negative, got {self.biased_holdout}."
            )
            raise ConfigurationError(error_msg)
        if self.fixed_kernel is not None:
            kernel = parse_kernel(self.fixed_kernel)
            if kernel.depth > self.pcfg.max_depth:
                error_msg = (
                    f"Fixed kernel {kernel.to_text()} has depth {kernel.depth}, "
                    f"deeper than the grammar maximum of {self.pcfg.max_depth}."
                )
                raise ConfigurationError(error_msg)
            object.__setattr__(self, "fixed_kernel", kernel.to_text())
            object.__setattr__(self, "smc", replace(self.smc, fixed_kernel=kernel))

    @property
    def sigmoid(self) -> str:
        """Sigmoid of the likelihood."""
        return self.model.sigmoid

    def resolve_batch_size(self, n_train: int) -> int:
        """Number of points per batch for a training set size.

        Parameters
        ----------
        n_train : int
            Number of training points.

        Returns
        -------
        int
            batch_size, or ceil(n_train / batch_count).
        """
        if self.batch_size is not None:
            return self.batch_size
        return max(1, math.ceil(n_train / self.batch_count))

    def to_dict(self) -> dict[str, Any]:
        """Configuration as a JSON-serializable dictionnary.

        Returns
        -------
        dict[str, Any]
            Every setting, nested configurations as dictionnaries.
        """
        return {
            "mode": self.mode,
            "data_path": self.data_path,
            "toy": None if self.toy is None else self.toy.to_dict(),
            "batch_count": self.batch_count,
            "batch_size": self.batch_size,
            "train_fraction": self.train_fraction,
            "split_seed": self.split_seed,
            "stratify": self.stratify,
            "standardize": self.standardize,
            "online_protocol": self.online_protocol,
            "biased_holdout": self.biased_holdout,
            "online_evaluation": self.online_evaluation,
            "fixed_kernel": self.fixed_kernel,
            "smc": self.smc.to_dict(),
            "pcfg": self.pcfg.to_dict(),
            "model": self.model.to_dict(),
            "output_dir": self.output_dir,
            "save_latents": self.save_latents,
        }


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    """Load or generate the raw dataset of an experiment.

    Parameters
    ----------
    cfg : ExperimentConfig
        Settings.

    Returns
    -------
    Dataset
        Unstandardized dataset.
    """
    if cfg.toy is not None:
        return gen_toy(cfg.toy)
    return load_csv(filepath=cfg.data_path, standardize=False)


def split_dataset(
    dataset: Dataset,
    train_fraction: float,
    seed: int,
    stratify: bool = True,
) -> tuple[Dataset, Dataset]:
    """Shuffle and split a dataset in a training and a test set.

    Parameters
    ----------
    dataset : Dataset
        Dataset to split.
    train_fraction : float
        Fraction of the points used for training.
    seed : int
        Shuffling seed.
    stratify : bool, optional
        Whether to preserve class proportions, ignored if a class has less than
        2 points., by default True

    Returns
    -------
    tuple[Dataset, Dataset]
        Training and test sets.
    """
    indices = np.arange(dataset.n)
    counts = np.bincount(dataset.y, minlength=2)
    use_strata = stratify and counts.min() >= 2
    train_idx, test_idx = train_test_split(
        indices,
        train_size=train_fraction,
        random_state=seed,
        shuffle=True,
        stratify=dataset.y if use_strata else None,
    )
    return dataset.subset(train_idx), dataset.subset(test_idx)


def offline_batches(train: Dataset, batch_size: int) -> list[Dataset]:
    """Training data in consecutive batches.

    Parameters
    ----------
    train : Dataset
        Training data.
    batch_size : int
        Points per batch.

    Returns
    -------
    list[Dataset]
        Batches.
    """
    return list(train.batches(batch_size))


def online_batches(
    train: Dataset,
    batch_size: int,
    protocol: str = "natural_order",
    biased_holdout: int = 0,
    seed: int = 0,
) -> list[Dataset]:
    """Order the training data as an online stream.

    'natural_order' streams the points in their order. 'class_biased_first_batch'
    first delivers every class 0 point except the last biased_holdout ones, then
    the class 1 points mixed with the held out class 0 points, shuffled, in
    batches of batch_size.

    Parameters
    ----------
    train : Dataset
        Training data.
    batch_size : int
        Points per batch, the biased first batch excepted.
    protocol : str, optional
        Ordering protocol., by default "natural_order"
    biased_holdout : int, optional
        Class 0 points kept out of the first batch., by default 0
    seed : int, optional
        Seed of the shuffling of the remaining points., by default 0

    Returns
    -------
    list[Dataset]
        Non-empty batches in arrival order.

    Raises
    ------
    ConfigurationError
        If the protocol is unknown.
    """
    if protocol == "natural_order":
        return list(train.batches(batch_size))
    if protocol != "class_biased_first_batch":
        error_msg = f"online_protocol must be one of {ONLINE_PROTOCOLS}."
        raise ConfigurationError(error_msg)
    class_0 = np.flatnonzero(train.y == 0)
    n_first = max(0, class_0.size - biased_holdout)
    first_idx = class_0[:n_first]
    rest_idx = np.concatenate([np.flatnonzero(train.y == 1), class_0[n_first:]])
    rest_idx = np.random.default_rng(seed).permutation(rest_idx)
    batches = [train.subset(first_idx)] if first_idx.size > 0 else []
    batches.extend(train.subset(rest_idx).batches(batch_size))
    return batches


def _prepare(cfg: ExperimentConfig) -> tuple[Dataset, Dataset, Standardizer]:
    dataset = load_dataset(cfg)
    train, test = split_dataset(
        dataset,
        cfg.train_fraction,
        cfg.split_seed,
        cfg.stratify,
    )
    standardizer = Standardizer()
    if cfg.standardize:
        standardizer.fit(train)
        train, test = standardizer.transform(train), standardizer.transform(test)
    return train, test, standardizer


def _print_header(cfg: ExperimentConfig) -> None:
    txt = (
        f"Running {cfg.mode} experiment with seed {cfg.smc.rng_seed}, "
        f"{cfg.smc.num_particles} particles and {cfg.smc.n_reju} rejuvenation sweeps"
    )
    Verbose().display(0, "\n\t" + "-" * len(txt))
    Verbose().display(0, "\t" + txt)
    Verbose().display(0, "\t" + "-" * len(txt) + "\n")


def _accuracy(
    ps: ParticleSet,
    X_train: np.ndarray,
    dataset: Dataset,
    model: ModelConfig,
    mc_seed: int,
) -> float:
    predictor = Predictor(ps, X_train, model, mc_seed)
    labels = np.array([r.label for r in predictor.predict(dataset.X)])
    return Accuracy().evaluate(labels, dataset.y)


def _report(
    cfg: ExperimentConfig,
    sampler: SmcSampler,
    metrics: dict[str, Any],
    runtime: float,
) -> dict[str, Any]:
    ps = sampler.particle_set
    return {
        "config": cfg.to_dict(),
        "seed": cfg.smc.rng_seed,
        "steps": [d.to_dict() for d in sampler.diagnostics],
        "particles": ps.to_dict(pcfg=cfg.pcfg)["particles"],
        "structure_frequencies": ps.structure_frequencies(),
        "log_marginal_estimate": ps.log_marginal_estimate,
        "metrics": metrics,
        "move_statistics": sampler.statistics.to_dict(),
        "numerics": NumericsMonitor().as_dict(),
        "runtime_seconds": runtime,
    }


def _finalize(
    cfg: ExperimentConfig,
    saver: RunSaver,
    sampler: SmcSampler,
    train: Dataset,
    test: Dataset,
    standardizer: Standardizer,
) -> None:
    ps = sampler.particle_set
    X_train = sampler.absorbed_data.X
    predictor = Predictor(ps, X_train, cfg.model, cfg.smc.rng_seed)
    results = predictor.predict(test.X, detail=cfg.save_latents)
    saver.save_predictions(results, y_true=test.y)
    saver.save_checkpoint(
        Checkpoint.from_sampler(sampler, standardizer, train.feature_names),
    )


def _sampler(
    cfg: ExperimentConfig,
    smc: SmcConfig,
    saver: RunSaver,
    standardizer: Standardizer,
    feature_names: list[str] | None,
) -> SmcSampler:
    def write_checkpoint(sampler: SmcSampler) -> Path:
        checkpoint = Checkpoint.from_sampler(sampler, standardizer, feature_names)
        return saver.save_checkpoint(checkpoint)

    return SmcSampler(cfg.pcfg, smc, cfg.model, checkpoint_writer=write_checkpoint)


def run_offline(cfg: ExperimentConfig) -> dict[str, Any]:
    """Learn from batches of the training split, then score the test split.

    The report, the test predictions and a checkpoint of the final particles
    are saved in cfg.output_dir.

    Parameters
    ----------
    cfg : ExperimentConfig
        Settings, mode must be 'offline'.

    Returns
    -------
    dict[str, Any]
        Report with keys config, seed, steps, particles, metrics (accuracy on
        the test split, train_accuracy), numerics and runtime_seconds.

    Raises
    ------
    ConfigurationError
        If the mode is not 'offline'.
    SmcAbortedError
        If a numerical failure interrupts the run.
    """
    if cfg.mode != "offline":
        error_msg = f"run_offline needs mode 'offline', got '{cfg.mode}'."
        raise ConfigurationError(error_msg)
    _print_header(cfg)
    t0 = time()
    NumericsMonitor().reset()
    saver = RunSaver(cfg.output_dir)
    train, test, standardizer = _prepare(cfg)
    batch_size = cfg.resolve_batch_size(train.n)
    smc = replace(cfg.smc, batch_size=batch_size)
    sampler = _sampler(cfg, smc, saver, standardizer, train.feature_names)
    ps = sampler.run(offline_batches(train, batch_size))
    mc_seed = smc.rng_seed
    X_train = sampler.absorbed_data.X
    metrics = {
        "accuracy": _accuracy(ps, X_train, test, cfg.model, mc_seed),
        "train_accuracy": _accuracy(ps, X_train, train, cfg.model, mc_seed),
        "n_train": train.n,
        "n_test": test.n,
    }
    _finalize(cfg, saver, sampler, train, test, standardizer)
    report = _report(replace(cfg, smc=smc), sampler, metrics, time() - t0)
    saver.save_report(report)
    Verbose().display(0, f"Test accuracy: {metrics['accuracy']:.4f}")
    return report


def run_online(cfg: ExperimentConfig) -> dict[str, Any]:
    """Absorb the training split as a stream, evaluating after every batch.

    Parameters
    ----------
    cfg : ExperimentConfig
        Settings, mode must be 'online'.

    Returns
    -------
    dict[str, Any]
        Report with metrics per_batch_accuracy, average_accuracy and
        final_accuracy (test split, after the last batch).

    Raises
    ------
    ConfigurationError
        If the mode is not 'online'.
    SmcAbortedError
        If a numerical failure interrupts the run.
    """
    if cfg.mode != "online":
        error_msg = f"run_online needs mode 'online', got '{cfg.mode}'."
        raise ConfigurationError(error_msg)
    _print_header(cfg)
    t0 = time()
    NumericsMonitor().reset()
    saver = RunSaver(cfg.output_dir)
    train, test, standardizer = _prepare(cfg)
    batch_size = cfg.resolve_batch_size(train.n)
    smc = replace(cfg.smc, batch_size=batch_size)
    batches = online_batches(
        train,
        batch_size,
        cfg.online_protocol,
        cfg.biased_holdout,
        cfg.split_seed,
    )
    sampler = _sampler(cfg, smc, saver, standardizer, train.feature_names)
    per_batch_accuracy: list[float] = []
    prequential = cfg.online_evaluation == "prequential" and len(batches) > 1

    def evaluate(current: SmcSampler, diagnostics: StepDiagnostics) -> None:
        if prequential:
            if diagnostics.step >= len(batches):
                return
            target = batches[diagnostics.step]
        else:
            target = test
        accuracy = _accuracy(
            current.particle_set,
            current.absorbed_data.X,
            target,
            cfg.model,
            smc.rng_seed,
        )
        per_batch_accuracy.append(accuracy)
        Verbose().display(0, f"Accuracy after step {diagnostics.step}: {accuracy:.4f}")

    ps = sampler.run(batches, on_step=evaluate)
    metrics = {
        "per_batch_accuracy": per_batch_accuracy,
        "average_accuracy": online_average_accuracy(per_batch_accuracy),
        "final_accuracy": _accuracy(
            ps,
            sampler.absorbed_data.X,
            test,
            cfg.model,
            smc.rng_seed,
        ),
        "batch_sizes": [b.n for b in batches],
        "n_train": train.n,
        "n_test": test.n,
    }
    _finalize(cfg, saver, sampler, train, test, standardizer)
    report = _report(replace(cfg, smc=smc), sampler, metrics, time() - t0)
    saver.save_report(report)
    Verbose().display(
        0,
        f"Online average accuracy: {metrics['average_accuracy']:.4f}",
    )
    return report


def run_experiment(cfg: ExperimentConfig) -> dict[str, Any]:
    """Run an offline or online experiment depending on cfg.mode.

    Parameters
    ----------
    cfg : ExperimentConfig
        Settings.

    Returns
    -------
    dict[str, Any]
        Report.
    """
    if cfg.mode == "offline":
        return run_offline(cfg)
    return run_online(cfg)
