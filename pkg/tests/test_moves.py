import numpy as np
import pytest

from gpc_discovery.core.model import (
    ModelConfig,
    Particle,
    log_likelihood_terms,
    sample_prior,
)
from gpc_discovery.inference.config import HmcConfig, SmcConfig, StructureMoveConfig
from gpc_discovery.inference.moves import (
    MoveStatistics,
    detach_attach_log_ratio,
    hamiltonian,
    hmc_step,
    imcmc_structure_step,
    leapfrog,
    rejuvenate,
    reweight,
    reweight_increment,
    subtree_replace_log_ratio,
)
from gpc_discovery.kernels.expressions import Leaf, Operator, parse_kernel
from gpc_discovery.kernels.grammar import (
    PcfgConfig,
    enumerate_kernels,
    kernel_log_prior,
)


@pytest.mark.parametrize("sigmoid", ["probit", "logistic"])
def test_reweight_forms_agree(make_particle, small_dataset, sigmoid):
    model = ModelConfig(sigmoid=sigmoid)
    p = make_particle("(SE + LIN)", n=small_dataset.n)
    X, y = small_dataset.X, small_dataset.y
    batch = slice(9, 12)
    conditional = reweight_increment(p, X, y, batch, model, form="conditional")
    ratio = reweight_increment(p, X, y, batch, model, form="ratio")
    assert np.isfinite(conditional)
    assert abs(conditional - ratio) < 1e-8


def test_empty_batch_increment(make_particle, small_dataset, model):
    p = make_particle("(SE)", n=small_dataset.n)
    increment = reweight_increment(
        p,
        small_dataset.X,
        small_dataset.y,
        slice(12, 12),
        model,
    )
    assert increment == 0.0


def test_reweight_adds_the_increment(make_particle, small_dataset, model):
    p = make_particle("(SE)", n=small_dataset.n).with_weight(-1.0)
    X, y = small_dataset.X, small_dataset.y
    updated = reweight(p, X, y, slice(10, 12), model)
    expected = -1.0 + reweight_increment(p, X, y, slice(10, 12), model)
    assert updated.log_weight == pytest.approx(expected)
    np.testing.assert_array_equal(updated.eta, p.eta)


def test_dead_particles_stay_dead(make_particle, small_dataset, model):
    p = make_particle("(SE)", n=small_dataset.n).with_weight(-np.inf)
    assert reweight(p, small_dataset.X, small_dataset.y, slice(10, 12), model) is p


def test_singular_covariance_is_flagged(small_dataset, model):
    p = Particle(
        kernel=Leaf("LIN"),
        theta_u=np.array([1000.0, 0.0]),
        eps_u=0.0,
        beta=0.0,
        eta=np.zeros(small_dataset.n),
    )
    stats = MoveStatistics()
    with np.errstate(over="ignore", invalid="ignore"):
        updated = reweight(
            p,
            small_dataset.X,
            small_dataset.y,
            slice(10, 12),
            model,
            stats,
        )
    assert updated.log_weight == -np.inf
    assert stats.flagged_weights == 1


def test_hamiltonian():
    assert hamiltonian(-1.0, np.array([1.0, 1.0]), 2.0) == pytest.approx(1.5)


def test_leapfrog_is_reversible():
    def gaussian(position):
        return -0.5 * float(position @ position), -position

    position = np.array([1.0, -0.5, 0.25])
    momentum = np.array([0.3, 0.2, -1.0])
    value, gradient = gaussian(position)
    new_position, new_momentum, new_value, new_gradient = leapfrog(
        position,
        momentum,
        gradient,
        gaussian,
        step_size=0.1,
        n_steps=20,
        mass=1.0,
    )
    assert hamiltonian(new_value, new_momentum, 1.0) == pytest.approx(
        hamiltonian(value, momentum, 1.0),
        abs=1e-2,
    )
    back_position, back_momentum, _, _ = leapfrog(
        new_position,
        -new_momentum,
        new_gradient,
        gaussian,
        step_size=0.1,
        n_steps=20,
        mass=1.0,
    )
    np.testing.assert_allclose(back_position, position, atol=1e-10)
    np.testing.assert_allclose(-back_momentum, momentum, atol=1e-10)


def test_zero_step_hmc_always_accepts(make_particle, small_dataset, model, rng):
    cfg = SmcConfig(hmc=HmcConfig(step_size=0.0, leapfrog_steps=3))
    p = make_particle("(SE + LIN)", n=small_dataset.n)
    stats = MoveStatistics()
    for _ in range(10):
        moved = hmc_step(p, small_dataset.X, small_dataset.y, cfg, rng, model, stats)
        np.testing.assert_array_equal(moved.continuous, p.continuous)
    assert stats.hmc_proposed == 10
    assert stats.hmc_accepted == 10
    assert stats.divergences == 0


def test_small_step_hmc_moves_and_accepts(make_particle, small_dataset, model, rng):
    cfg = SmcConfig(hmc=HmcConfig(step_size=1e-3, leapfrog_steps=5))
    p = make_particle("(SE)", n=small_dataset.n)
    stats = MoveStatistics()
    moved = p
    for _ in range(20):
        moved = hmc_step(
            moved, small_dataset.X, small_dataset.y, cfg, rng, model, stats
        )
    assert stats.hmc_accepted >= 19
    assert not np.array_equal(moved.continuous, p.continuous)
    assert moved.kernel == p.kernel
    assert moved.log_weight == p.log_weight


def test_rejuvenate_without_sweeps_is_identity(
    make_particle,
    small_dataset,
    pcfg,
    model,
    rng,
):
    cfg = SmcConfig(n_reju=0)
    p = make_particle("(SE + LIN)", n=small_dataset.n)
    assert rejuvenate(p, small_dataset.X, small_dataset.y, cfg, rng, pcfg, model) is p


def test_rejuvenate_skips_dead_particles(make_particle, small_dataset, pcfg, rng):
    p = make_particle("(SE)", n=small_dataset.n).with_weight(-np.inf)
    cfg = SmcConfig(n_reju=3)
    assert rejuvenate(p, small_dataset.X, small_dataset.y, cfg, rng, pcfg) is p


def test_rejuvenate_with_fixed_kernel(make_particle, small_dataset, pcfg, model, rng):
    cfg = SmcConfig(
        n_reju=2,
        fixed_kernel=Leaf("SE"),
        hmc=HmcConfig(step_size=0.01, leapfrog_steps=3),
    )
    p = make_particle("(SE)", n=small_dataset.n).with_weight(-1.5)
    stats = MoveStatistics()
    result = rejuvenate(
        p,
        small_dataset.X,
        small_dataset.y,
        cfg,
        rng,
        pcfg,
        model,
        stats,
    )
    assert result.kernel == Leaf("SE")
    assert result.log_weight == -1.5
    assert stats.structure_proposed == 0
    assert stats.hmc_proposed == 2


def test_structure_step_keeps_continuous_latents(
    make_particle,
    small_dataset,
    pcfg,
    model,
):
    cfg = SmcConfig()
    p = make_particle("(LIN + (SE * GE))", n=small_dataset.n)
    stats = MoveStatistics()
    for seed in range(15):
        rng = np.random.default_rng(seed)
        moved = imcmc_structure_step(
            p,
            small_dataset.X,
            small_dataset.y,
            pcfg,
            cfg,
            rng,
            model,
            stats,
        )
        assert moved.kernel.depth <= pcfg.max_depth
        assert moved.theta_u.shape == (moved.kernel.param_dim,)
        np.testing.assert_array_equal(moved.eta, p.eta)
        assert moved.eps_u == p.eps_u
        assert moved.beta == p.beta
        assert moved.log_weight == p.log_weight
    assert stats.structure_proposed == 15
    assert 0 <= stats.structure_accepted <= 15


def test_leaves_always_use_subtree_replace(make_particle, small_dataset, pcfg, rng):
    cfg = SmcConfig(
        structure_moves=StructureMoveConfig(subtree_replace=0.0, detach_attach=1.0),
    )
    p = make_particle("(GE)", n=small_dataset.n)
    stats = MoveStatistics()
    imcmc_structure_step(
        p,
        small_dataset.X,
        small_dataset.y,
        pcfg,
        cfg,
        rng,
        stats=stats,
    )
    assert stats.subtree_replace_proposed == 1
    assert stats.detach_attach_proposed == 0


def test_identity_subtree_replace_has_zero_log_ratio(
    make_particle,
    small_dataset,
    pcfg,
    model,
):
    p = make_particle("(SE + LIN)", n=small_dataset.n)
    proposal, log_ratio = subtree_replace_log_ratio(
        p,
        (1,),
        Leaf("LIN"),
        p.theta_u[1:3],
        small_dataset.X,
        small_dataset.y,
        pcfg,
        SmcConfig(),
        model,
    )
    assert proposal.kernel == p.kernel
    np.testing.assert_array_equal(proposal.theta_u, p.theta_u)
    assert log_ratio == pytest.approx(0.0, abs=1e-10)


def test_subtree_replace_disabled_on_composites_is_rejected(
    make_particle,
    small_dataset,
    pcfg,
    model,
):
    cfg = SmcConfig(
        structure_moves=StructureMoveConfig(subtree_replace=0.0, detach_attach=1.0),
    )
    p = make_particle("(SE)", n=small_dataset.n)
    new_subtree = parse_kernel("(LIN + SE)")
    with np.errstate(divide="raise"):
        proposal, log_ratio = subtree_replace_log_ratio(
            p,
            (),
            new_subtree,
            np.zeros(new_subtree.param_dim),
            small_dataset.X,
            small_dataset.y,
            pcfg,
            cfg,
            model,
        )
    assert proposal.kernel == new_subtree
    assert log_ratio == -np.inf


def test_detach_attach_log_ratio(make_particle, small_dataset, pcfg, model):
    p = make_particle("(SE + LIN)", n=small_dataset.n)
    proposal, log_ratio = detach_attach_log_ratio(
        p,
        (0,),
        (),
        Operator.SUM,
        0,
        small_dataset.X,
        small_dataset.y,
        pcfg,
        model,
    )
    assert proposal.kernel == p.kernel
    assert log_ratio == pytest.approx(0.0, abs=1e-10)
    deep = make_particle("((LIN + SE) * (GE + SE))", n=small_dataset.n)
    proposal, log_ratio = detach_attach_log_ratio(
        deep,
        (0, 0),
        (1, 0),
        Operator.SUM,
        0,
        small_dataset.X,
        small_dataset.y,
        pcfg,
        model,
    )
    assert proposal is None
    assert log_ratio == -np.inf


def test_move_statistics():
    stats = MoveStatistics()
    assert stats.structure_acceptance_rate is None
    assert stats.hmc_acceptance_rate is None
    other = MoveStatistics(subtree_replace_proposed=2, subtree_replace_accepted=1)
    other.hmc_proposed, other.hmc_accepted = 4, 3
    stats.merge(other)
    stats.merge(other)
    content = stats.to_dict()
    assert content["subtree_replace_proposed"] == 4
    assert content["structure_acceptance_rate"] == pytest.approx(0.5)
    assert content["hmc_acceptance_rate"] == pytest.approx(0.75)


@pytest.mark.slow()
def test_structure_chain_without_data_recovers_the_grammar_prior(model):
    pcfg = PcfgConfig(max_depth=2)
    cfg = SmcConfig()
    rng = np.random.default_rng(0)
    X, y = np.zeros((0, 1)), np.zeros(0, dtype=int)
    p = sample_prior(pcfg, 0, rng, model)
    counts: dict[str, int] = {}
    for step in range(31_000):
        p = imcmc_structure_step(p, X, y, pcfg, cfg, rng, model)
        if step >= 1_000:
            counts[p.kernel.to_text()] = counts.get(p.kernel.to_text(), 0) + 1
    kernels = enumerate_kernels(pcfg)
    assert len(kernels) == 21
    expected = {k.to_text(): np.exp(kernel_log_prior(k, pcfg)) for k in kernels}
    assert sum(expected.values()) == pytest.approx(1.0)
    assert set(counts) <= set(expected)
    total = sum(counts.values())
    for text, probability in expected.items():
        assert abs(counts.get(text, 0) / total - probability) < 0.02


def _prior_importance(kernel, X, y, model, n_draws, seed):
    """Marginal likelihood and posterior mean of beta by prior sampling."""
    rng = np.random.default_rng(seed)
    pcfg = PcfgConfig(max_depth=1)
    weights, betas = np.empty(n_draws), np.empty(n_draws)
    for i in range(n_draws):
        p = sample_prior(pcfg, X.shape[0], rng, model, kernel=kernel)
        weights[i] = np.exp(log_likelihood_terms(p, X, y, model))
        betas[i] = p.beta
    return weights.mean(), np.sum(weights * betas) / np.sum(weights)


@pytest.mark.slow()
def test_rejuvenation_targets_the_structure_posterior(model):
    pcfg = PcfgConfig(max_depth=1)
    cfg = SmcConfig(n_reju=1, hmc=HmcConfig(step_size=0.1, leapfrog_steps=10))
    X, y = np.array([[-0.5], [0.7]]), np.array([0, 1])
    tags = list(pcfg.base_weights)
    evidence = np.array(
        [
            _prior_importance(Leaf(tag), X, y, model, 20_000, seed)[0]
            for seed, tag in enumerate(tags)
        ],
    )
    oracle = evidence / evidence.sum()

    rng = np.random.default_rng(1)
    p = sample_prior(pcfg, 2, rng, model)
    visits = dict.fromkeys(tags, 0)
    for step in range(21_000):
        p = rejuvenate(p, X, y, cfg, rng, pcfg, model)
        if step >= 1_000:
            visits[p.kernel.to_text()[1:-1]] += 1
    empirical = np.array([visits[tag] for tag in tags]) / 20_000
    assert 0.5 * np.abs(empirical - oracle).sum() < 0.05


@pytest.mark.slow()
def test_hmc_targets_the_offset_posterior(model):
    cfg = SmcConfig(hmc=HmcConfig(step_size=0.1, leapfrog_steps=10))
    X, y = np.array([[-0.5], [0.7]]), np.array([1, 1])
    _, oracle_beta = _prior_importance(Leaf("LIN"), X, y, model, 40_000, 0)

    rng = np.random.default_rng(2)
    p = sample_prior(PcfgConfig(max_depth=1), 2, rng, model, kernel=Leaf("LIN"))
    betas = []
    for step in range(21_000):
        p = hmc_step(p, X, y, cfg, rng, model)
        if step >= 1_000:
            betas.append(p.beta)
    assert abs(np.mean(betas) - oracle_beta) < 0.05
