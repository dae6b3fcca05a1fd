from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from gpc_discovery.core.datasets import Dataset
from gpc_discovery.core.model import latent_f, log_likelihood_pointwise
from gpc_discovery.exceptions import (
    ConfigurationError,
    ParticleDegeneracyError,
    SmcAbortedError,
)
from gpc_discovery.inference import smc
from gpc_discovery.inference.config import SmcConfig
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.inference.smc import (
    SmcSampler,
    maybe_resample,
    particle_rng,
    run_smc,
)
from gpc_discovery.kernels.expressions import parse_kernel
from gpc_discovery.verbose import NumericsMonitor


def test_particle_streams_are_reproducible_and_distinct():
    first = particle_rng(3, smc.INIT_STREAM, 0, 1).standard_normal(4)
    again = particle_rng(3, smc.INIT_STREAM, 0, 1).standard_normal(4)
    other = particle_rng(3, smc.INIT_STREAM, 0, 2).standard_normal(4)
    np.testing.assert_array_equal(first, again)
    assert not np.array_equal(first, other)


def test_runs_are_deterministic(small_dataset, pcfg, smc_cfg, model):
    cfg = replace(smc_cfg, batch_size=4)
    first = run_smc(small_dataset, pcfg, cfg, model=model)
    second = run_smc(small_dataset, pcfg, cfg, model=model)
    assert first.absorbed == small_dataset.n
    assert first.is_identical(second)


def test_unit_batches_match_the_online_stream(small_dataset, pcfg, smc_cfg, model):
    cfg = replace(smc_cfg, batch_size=1)
    offline = run_smc(small_dataset, pcfg, cfg, mode="offline_batched", model=model)
    online = run_smc(
        small_dataset.batches(1),
        pcfg,
        cfg,
        mode="online_stream",
        model=model,
    )
    assert offline.is_identical(online)


def test_workers_do_not_change_the_result(small_dataset, pcfg, smc_cfg, model):
    cfg = replace(smc_cfg, batch_size=6)
    monitor = NumericsMonitor()
    sequential = run_smc(small_dataset, pcfg, cfg, model=model)
    sequential_counts = monitor.as_dict()
    monitor.reset()
    threaded = run_smc(small_dataset, pcfg, replace(cfg, n_workers=2), model=model)
    assert sequential.is_identical(threaded)
    assert monitor.as_dict() == sequential_counts


def test_single_particle_single_point(pcfg, model):
    cfg = SmcConfig(
        num_particles=1,
        n_reju=0,
        batch_size=1,
        rng_seed=11,
    )
    data = Dataset(np.array([[0.5, -0.2]]), np.array([1]))
    ps = run_smc(data, pcfg, cfg, model=model)
    particle = ps.particles[0]
    expected = float(
        np.sum(log_likelihood_pointwise(latent_f(particle, data.X), data.y, "probit"))
    )
    assert particle.n_aux == 1
    assert particle.log_weight == pytest.approx(expected)
    assert ps.log_marginal_estimate == pytest.approx(expected)


def test_empty_dataset(pcfg, smc_cfg, model):
    ps = run_smc(Dataset.empty(2), pcfg, smc_cfg, model=model)
    assert ps.absorbed == 0
    assert len(ps) == smc_cfg.num_particles
    assert ps.log_marginal_estimate == 0.0


def test_fixed_kernel_runs_keep_the_kernel(small_dataset, pcfg, smc_cfg, model):
    kernel = parse_kernel("(LIN)")
    cfg = replace(smc_cfg, fixed_kernel=kernel, batch_size=6)
    ps = run_smc(small_dataset, pcfg, cfg, model=model)
    assert set(ps.structures) == {"(LIN)"}


def test_step_diagnostics(small_dataset, pcfg, smc_cfg, model):
    sampler = SmcSampler(pcfg, smc_cfg, model)
    calls = []
    ps = sampler.run(
        small_dataset.batches(5),
        on_step=lambda s, d: calls.append((s.step, d.absorbed)),
    )
    assert calls == [(1, 5), (2, 10), (3, 12)]
    assert [d.batch_size for d in sampler.diagnostics] == [5, 5, 2]
    assert sampler.diagnostics[-1].resampled is False
    assert sampler.diagnostics[-1].log_marginal_estimate == ps.log_marginal_estimate
    total = sum(d.log_marginal_increment for d in sampler.diagnostics)
    assert total == pytest.approx(ps.log_marginal_estimate)
    for diagnostics in sampler.diagnostics:
        assert 1.0 <= diagnostics.ess <= smc_cfg.num_particles + 1e-9
        content = diagnostics.to_dict()
        assert len(content["structures"]) == smc_cfg.num_particles
    assert sampler.absorbed_data.n == small_dataset.n


def test_empty_batches_are_skipped(small_dataset, pcfg, smc_cfg, model):
    sampler = SmcSampler(pcfg, smc_cfg, model)
    batches = [small_dataset.subset(slice(0, 6)), Dataset.empty(2)]
    ps = sampler.run(batches)
    assert ps.absorbed == 6
    assert len(sampler.diagnostics) == 1


def _weighted_set(make_particle, log_weights):
    particles = [
        make_particle("(SE)", n=0, seed=i).with_weight(w)
        for i, w in enumerate(log_weights)
    ]
    return ParticleSet(particles=particles, absorbed=0)


def test_maybe_resample(make_particle, smc_cfg, rng):
    ps = _weighted_set(make_particle, [0.0, -50.0, -50.0, -50.0])
    assert maybe_resample(ps, smc_cfg, rng, is_final=True) is ps
    resampled = maybe_resample(ps, smc_cfg, rng)
    assert len(resampled) == 4
    np.testing.assert_allclose(resampled.log_weights, -np.log(4), atol=1e-12)
    for particle in resampled.particles:
        np.testing.assert_array_equal(particle.theta_u, ps.particles[0].theta_u)
    balanced = _weighted_set(make_particle, [0.0, 0.0, 0.1, -0.1])
    assert maybe_resample(balanced, smc_cfg, rng) is balanced


def test_collapsed_weights_abort_the_run(
    small_dataset,
    pcfg,
    smc_cfg,
    model,
    tmp_path,
    monkeypatch,
):
    written = []

    def writer(sampler: SmcSampler) -> Path:
        written.append((sampler.step, sampler.particle_set.absorbed))
        return tmp_path / "checkpoint.json"

    sampler = SmcSampler(pcfg, smc_cfg, model, checkpoint_writer=writer)
    sampler.run([small_dataset.subset(slice(0, 6))])
    before = sampler.particle_set

    def collapse(p, *args, **kwargs):
        return p.with_weight(-np.inf)

    monkeypatch.setattr(smc, "reweight", collapse)
    with pytest.raises(SmcAbortedError) as info:
        sampler.run([small_dataset.subset(slice(6, 12))])
    assert isinstance(info.value.cause, ParticleDegeneracyError)
    assert info.value.checkpoint == tmp_path / "checkpoint.json"
    assert info.value.step == 2
    assert written == [(1, 6)]
    assert sampler.step == 1
    assert sampler.particle_set is before
    assert sampler.absorbed_data.n == 6


def test_unknown_mode(small_dataset, pcfg, smc_cfg):
    with pytest.raises(ConfigurationError):
        run_smc(small_dataset, pcfg, smc_cfg, mode="streaming")
    with pytest.raises(ConfigurationError):
        run_smc(small_dataset.batches(2), pcfg, smc_cfg, mode="offline_batched")
