"""Sequential Monte Carlo over kernel structures, parameters and latent values."""

from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from scipy.special import logsumexp

from gpc_discovery.core.datasets import Dataset
from gpc_discovery.core.model import ModelConfig, Particle, extend_aux, sample_prior
from gpc_discovery.core.numerics import systematic_resample
from gpc_discovery.exceptions import (
    ConfigurationError,
    NegativeVarianceError,
    NonFiniteGradientError,
    NonPositiveDefiniteError,
    ParticleDegeneracyError,
    SmcAbortedError,
)
from gpc_discovery.inference.config import SmcConfig
from gpc_discovery.inference.moves import MoveStatistics, rejuvenate, reweight
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.kernels.grammar import PcfgConfig
from gpc_discovery.verbose import Verbose, with_verbose

INIT_STREAM = 0
EXTEND_STREAM = 1
REJUVENATION_STREAM = 2
RESAMPLE_STREAM = 3

MODES = ("offline_batched", "online_stream")

ABORTING_FAILURES = (
    NonPositiveDefiniteError,
    NegativeVarianceError,
    NonFiniteGradientError,
    ParticleDegeneracyError,
)

T = TypeVar("T")


def particle_rng(seed: int, purpose: int, step: int, index: int) -> np.random.Generator:
    """Independent random stream of one particle for one phase of one step.

    Parameters
    ----------
    seed : int
        Root seed.
    purpose : int
        Phase identifier (initialization, extension, rejuvenation, resampling).
    step : int
        Step index.
    index : int
        Particle index.

    Returns
    -------
    np.random.Generator
        Generator seeded from (seed, purpose, step, index).
    """
    return np.random.default_rng(np.random.SeedSequence([seed, purpose, step, index]))


@dataclass
class StepDiagnostics:
    """Summary of one SMC step."""

    step: int
    absorbed: int
    batch_size: int
    ess: float
    resampled: bool
    log_marginal_increment: float
    log_marginal_estimate: float
    statistics: MoveStatistics = field(default_factory=MoveStatistics)
    structures: list[str] = field(default_factory=list)
    log_weights: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        """Diagnostics as a JSON-serializable dictionnary.

        Returns
        -------
        dict[str, Any]
            Step summary.
        """
        return {
            "step": self.step,
            "absorbed": self.absorbed,
            "batch_size": self.batch_size,
            "ess": self.ess,
            "resampled": self.resampled,
            "log_marginal_increment": self.log_marginal_increment,
            "log_marginal_estimate": self.log_marginal_estimate,
            "structure_acceptance_rate": self.statistics.structure_acceptance_rate,
            "hmc_acceptance_rate": self.statistics.hmc_acceptance_rate,
            "moves": self.statistics.to_dict(),
            "structures": self.structures,
            "log_weights": self.log_weights,
        }

    def summary_line(self) -> str:
        """One-line description of the step.

        Returns
        -------
        str
            Step index, absorbed count, ESS, resample flag and acceptance rates.
        """
        structure_rate = self.statistics.structure_acceptance_rate
        hmc_rate = self.statistics.hmc_acceptance_rate
        structure = "-" if structure_rate is None else f"{structure_rate:.2f}"
        hmc = "-" if hmc_rate is None else f"{hmc_rate:.2f}"
        return (
            f"Step {self.step}: {self.absorbed} points absorbed, "
            f"ESS {self.ess:.2f}, resampled: {self.resampled}, "
            f"structure acceptance {structure}, HMC acceptance {hmc}"
        )


def should_resample(ps: ParticleSet, cfg: SmcConfig) -> bool:
    """Whether the effective sample size dropped below the threshold.

    Parameters
    ----------
    ps : ParticleSet
        Weighted particles.
    cfg : SmcConfig
        Sampler settings.

    Returns
    -------
    bool
        ESS < ess_threshold_frac * M.
    """
    return ps.ess < cfg.ess_threshold_frac * len(ps)


def maybe_resample(
    ps: ParticleSet,
    cfg: SmcConfig,
    rng: np.random.Generator | None = None,
    is_final: bool = False,
) -> ParticleSet:
    """Resample the particles if their ESS dropped below the threshold.

    Parameters
    ----------
    ps : ParticleSet
        Weighted particles.
    cfg : SmcConfig
        Sampler settings.
    rng : np.random.Generator | None, optional
        Random stream, derived from the root seed if None., by default None
    is_final : bool, optional
        Resampling is skipped at the final step., by default False

    Returns
    -------
    ParticleSet
        ps itself, or the resampled set where every log-weight is the log of
        the mean weight.

    Raises
    ------
    ParticleDegeneracyError
        If every weight is zero.
    """
    if is_final or not should_resample(ps, cfg):
        return ps
    if rng is None:
        rng = particle_rng(cfg.rng_seed, RESAMPLE_STREAM, ps.absorbed, 0)
    log_weights = ps.log_weights
    M = len(ps)
    mean_log_weight = float(logsumexp(log_weights) - np.log(M))
    ancestors = systematic_resample(ps.weights, M, rng)
    particles = [ps.particles[i].with_weight(mean_log_weight) for i in ancestors]
    return ParticleSet(
        particles=particles,
        absorbed=ps.absorbed,
        log_marginal_estimate=ps.log_marginal_estimate,
    )


class SmcSampler:
    """Data-tempered SMC sampler.

    Each step absorbs a batch: the particles' latent values are extended,
    reweighted by the new labels' likelihood, resampled if the ESS is low and
    rejuvenated on every point absorbed so far.

    Parameters
    ----------
    pcfg : PcfgConfig
        Kernel grammar.
    cfg : SmcConfig
        Sampler settings.
    model : ModelConfig | None, optional
        Likelihood settings, defaults if None., by default None
    checkpoint_writer : Callable[[SmcSampler], Path] | None, optional
        Called with the last valid sampler state when a run aborts, returns the
        checkpoint's path., by default None
    """

    def __init__(
        self,
        pcfg: PcfgConfig,
        cfg: SmcConfig,
        model: ModelConfig | None = None,
        checkpoint_writer: Callable[["SmcSampler"], Path] | None = None,
    ) -> None:
        self.pcfg = pcfg
        self.cfg = cfg
        self.model = ModelConfig() if model is None else model
        self.checkpoint_writer = checkpoint_writer
        self.diagnostics: list[StepDiagnostics] = []
        self.statistics = MoveStatistics()
        self.step = 0
        self._particle_set: ParticleSet | None = None
        self._X: np.ndarray | None = None
        self._y = np.zeros(0, dtype=int)

    @property
    def particle_set(self) -> ParticleSet:
        """Current particle set, initialized from the prior on first access."""
        if self._particle_set is None:
            self._particle_set = self.initialize()
        return self._particle_set

    @property
    def absorbed_data(self) -> Dataset | None:
        """Every data point absorbed so far, None before the first batch."""
        if self._X is None:
            return None
        return Dataset(self._X, self._y)

    def _map(
        self,
        func: Callable[[int, T], Particle],
        items: list[T],
    ) -> list[Particle]:
        if self.cfg.n_workers == 1:
            return [func(i, item) for i, item in enumerate(items)]
        with ThreadPoolExecutor(max_workers=self.cfg.n_workers) as executor:
            return list(executor.map(func, range(len(items)), items))

    @with_verbose(trigger_threshold=1, message="Sampling particles from the prior.")
    def initialize(self) -> ParticleSet:
        """Draw M particles from the prior, with equal weights.

        Returns
        -------
        ParticleSet
            Prior particles with empty eta.
        """

        def draw(index: int, _: Any) -> Particle:
            rng = particle_rng(self.cfg.rng_seed, INIT_STREAM, 0, index)
            return sample_prior(
                self.pcfg,
                0,
                rng,
                model=self.model,
                kernel=self.cfg.fixed_kernel,
            )

        particles = self._map(draw, [None] * self.cfg.num_particles)
        self._particle_set = ParticleSet(particles=particles, absorbed=0)
        return self._particle_set

    def restore(
        self,
        particle_set: ParticleSet,
        absorbed_data: Dataset | None,
        step: int,
    ) -> None:
        """Resume from a saved state.

        Parameters
        ----------
        particle_set : ParticleSet
            Particles conditioned on absorbed_data.
        absorbed_data : Dataset | None
            Every data point absorbed so far.
        step : int
            Index of the last completed step.
        """
        self._particle_set = particle_set
        self.step = step
        if absorbed_data is None or absorbed_data.n == 0:
            self._X = None
            self._y = np.zeros(0, dtype=int)
        else:
            self._X = absorbed_data.X
            self._y = absorbed_data.y

    def _reweight_phase(
        self,
        ps: ParticleSet,
        X: np.ndarray,
        y: np.ndarray,
        new_batch: slice,
        statistics: list[MoveStatistics],
    ) -> list[Particle]:
        Verbose().display(1, "Reweighting particles.")
        step = self.step
        n_new = new_batch.stop - new_batch.start

        def extend_and_reweight(index: int, particle: Particle) -> Particle:
            rng = particle_rng(self.cfg.rng_seed, EXTEND_STREAM, step, index)
            extended = extend_aux(particle, n_new, rng)
            return reweight(
                extended,
                X,
                y,
                new_batch,
                model=self.model,
                stats=statistics[index],
            )

        return self._map(extend_and_reweight, ps.particles)

    def _rejuvenation_phase(
        self,
        ps: ParticleSet,
        X: np.ndarray,
        y: np.ndarray,
        statistics: list[MoveStatistics],
    ) -> list[Particle]:
        Verbose().display(1, f"Rejuvenating particles ({self.cfg.n_reju} sweeps).")
        step = self.step

        def rejuvenate_one(index: int, particle: Particle) -> Particle:
            rng = particle_rng(self.cfg.rng_seed, REJUVENATION_STREAM, step, index)
            return rejuvenate(
                particle,
                X,
                y,
                self.cfg,
                rng,
                self.pcfg,
                model=self.model,
                stats=statistics[index],
            )

        return self._map(rejuvenate_one, ps.particles)

    def absorb(self, batch: Dataset, is_final: bool = False) -> StepDiagnostics:
        """Condition the particles on a new batch.

        Parameters
        ----------
        batch : Dataset
            New data points.
        is_final : bool, optional
            Whether this is the last batch, resampling is then skipped.
            , by default False

        Returns
        -------
        StepDiagnostics
            Summary of the step.

        Raises
        ------
        ParticleDegeneracyError
            If every particle weight collapsed to zero.
        """
        ps = self.particle_set
        self.step += 1
        start = ps.absorbed
        X = batch.X if self._X is None else np.vstack([self._X, batch.X])
        y = np.concatenate([self._y, batch.y])
        new_batch = slice(start, start + batch.n)
        statistics = [MoveStatistics() for _ in range(len(ps))]

        previous_total = float(logsumexp(ps.log_weights))
        particles = self._reweight_phase(ps, X, y, new_batch, statistics)
        log_weights = np.array([p.log_weight for p in particles])
        total = float(logsumexp(log_weights))
        if not np.isfinite(total):
            error_msg = f"Every particle weight collapsed at step {self.step}."
            raise ParticleDegeneracyError(error_msg)
        increment = total - previous_total
        ps = ParticleSet(
            particles=particles,
            absorbed=start + batch.n,
            log_marginal_estimate=ps.log_marginal_estimate + increment,
        )
        ess = ps.ess
        resampled = not is_final and should_resample(ps, self.cfg)
        if resampled:
            Verbose().display(1, f"Resampling particles (ESS {ess:.2f}).")
            rng = particle_rng(self.cfg.rng_seed, RESAMPLE_STREAM, self.step, 0)
            ps = maybe_resample(ps, self.cfg, rng)
        particles = self._rejuvenation_phase(ps, X, y, statistics)
        ps = ParticleSet(
            particles=particles,
            absorbed=ps.absorbed,
            log_marginal_estimate=ps.log_marginal_estimate,
        )

        step_statistics = MoveStatistics()
        for particle_statistics in statistics:
            step_statistics.merge(particle_statistics)
        self.statistics.merge(step_statistics)
        self._particle_set = ps
        self._X, self._y = X, y
        diagnostics = StepDiagnostics(
            step=self.step,
            absorbed=ps.absorbed,
            batch_size=batch.n,
            ess=ess,
            resampled=resampled,
            log_marginal_increment=increment,
            log_marginal_estimate=ps.log_marginal_estimate,
            statistics=step_statistics,
            structures=ps.structures,
            log_weights=ps.log_weights.tolist(),
        )
        self.diagnostics.append(diagnostics)
        Verbose().display(0, diagnostics.summary_line())
        return diagnostics

    def _abort(self, failed_step: int, error: Exception) -> SmcAbortedError:
        checkpoint = None
        if self.checkpoint_writer is not None:
            checkpoint = self.checkpoint_writer(self)
        return SmcAbortedError(failed_step, error, checkpoint)

    def run(
        self,
        batches: Iterable[Dataset],
        on_step: Callable[["SmcSampler", StepDiagnostics], None] | None = None,
    ) -> ParticleSet:
        """Absorb every batch of a stream.

        Parameters
        ----------
        batches : Iterable[Dataset]
            Batches, in arrival order. The stream is read one batch ahead to
            know which batch is the final one.
        on_step : Callable[[SmcSampler, StepDiagnostics], None] | None, optional
            Called after every completed step, for example to evaluate the
            particles on held-out data., by default None

        Returns
        -------
        ParticleSet
            Particles conditioned on every batch.

        Raises
        ------
        SmcAbortedError
            If a numerical failure interrupts the run, after saving the last
            valid state when a checkpoint writer is set.
        """
        if self._particle_set is None:
            self.initialize()
        for batch, is_final in _with_lookahead(batches):
            if batch.n == 0:
                continue
            valid_state = (self._particle_set, self._X, self._y, self.step)
            try:
                self.absorb(batch, is_final=is_final)
            except ABORTING_FAILURES as error:
                failed_step = self.step
                self._particle_set, self._X, self._y, self.step = valid_state
                raise self._abort(failed_step, error) from error
            if on_step is not None:
                on_step(self, self.diagnostics[-1])
        return self.particle_set


def _with_lookahead(batches: Iterable[Dataset]) -> Iterator[tuple[Dataset, bool]]:
    iterator = iter(batches)
    try:
        current = next(iterator)
    except StopIteration:
        return
    for upcoming in iterator:
        yield current, False
        current = upcoming
    yield current, True


def run_smc(
    data: Dataset | Iterable[Dataset],
    pcfg: PcfgConfig,
    cfg: SmcConfig,
    mode: str = "offline_batched",
    model: ModelConfig | None = None,
) -> ParticleSet:
    """Run the sampler over a dataset or a stream of batches.

    Parameters
    ----------
    data : Dataset | Iterable[Dataset]
        Dataset, or stream of batches in online_stream mode.
    pcfg : PcfgConfig
        Kernel grammar.
    cfg : SmcConfig
        Sampler settings.
    mode : str, optional
        'offline_batched' splits data in batches of cfg.batch_size.
        'online_stream' absorbs the batches of a stream in arrival order, a
        Dataset being streamed in batches of cfg.batch_size.
        , by default "offline_batched"
    model : ModelConfig | None, optional
        Likelihood settings, defaults if None., by default None

    Returns
    -------
    ParticleSet
        Final particles.

    Raises
    ------
    ConfigurationError
        If the mode is unknown or offline data is not a Dataset.
    """
    if mode not in MODES:
        error_msg = f"Unknown mode '{mode}', expected one of {MODES}."
        raise ConfigurationError(error_msg)
    sampler = SmcSampler(pcfg, cfg, model)
    if isinstance(data, Dataset):
        return sampler.run(data.batches(cfg.batch_size))
    if mode == "offline_batched":
        error_msg = "offline_batched mode needs a Dataset."
        raise ConfigurationError(error_msg)
    return sampler.run(data)
