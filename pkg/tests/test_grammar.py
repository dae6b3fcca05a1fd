from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from gpc_discovery.exceptions import ConfigurationError, KernelDepthError
from gpc_discovery.kernels.expressions import Leaf, parse_kernel
from gpc_discovery.kernels.grammar import (
    PcfgConfig,
    enumerate_kernels,
    kernel_log_prior,
    sample_kernel,
)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"p_leaf": 0.0, "p_sum": 0.5, "p_product": 0.5},
        {"p_leaf": 0.5, "p_sum": 0.5, "p_product": 0.5},
        {"p_leaf": 0.5, "p_sum": -0.25, "p_product": 0.75},
        {"p_leaf": 0.5, "p_sum": 0.0, "p_product": 0.5},
        {"p_leaf": 1.0, "p_sum": 0.0, "p_product": 0.0},
        {"base_weights": {"SE": 0.5, "PER": 0.5}},
        {"base_weights": {"SE": 0.5, "LIN": 0.4}},
        {"base_weights": {}},
        {"max_depth": 0},
    ],
)
def test_invalid_grammars(kwargs):
    with pytest.raises(ConfigurationError):
        PcfgConfig(**kwargs)


def test_default_grammar():
    pcfg = PcfgConfig()
    assert pcfg.base_weights == pytest.approx({"LIN": 1 / 3, "SE": 1 / 3, "GE": 1 / 3})
    assert pcfg.production_probabilities(1) == {"leaf": 0.5, "+": 0.25, "*": 0.25}
    assert pcfg.production_probabilities(pcfg.max_depth) == {
        "leaf": 1.0,
        "+": 0.0,
        "*": 0.0,
    }


def test_from_dict_normalizes_tags():
    pcfg = PcfgConfig.from_dict(
        {"base_weights": {"se": 0.5, "lin": 0.5}, "max_depth": 2},
    )
    assert pcfg.base_weights == {"SE": 0.5, "LIN": 0.5}
    assert PcfgConfig.from_dict(pcfg.to_dict()) == pcfg


def test_log_prior_by_hand():
    pcfg = PcfgConfig(max_depth=3)
    assert kernel_log_prior(Leaf("SE"), pcfg) == pytest.approx(np.log(0.5 / 3))
    # (SE + (LIN * GE)): sum at depth 1, product at depth 2, leaves forced at depth 3
    expected = np.log(0.25) + np.log(0.5 / 3) + np.log(0.25) + 2 * np.log(1 / 3)
    assert kernel_log_prior(parse_kernel("(SE + (LIN * GE))"), pcfg) == pytest.approx(
        expected,
    )


def test_log_prior_of_subtrees():
    pcfg = PcfgConfig(max_depth=3)
    assert kernel_log_prior(Leaf("GE"), pcfg, start_depth=3) == pytest.approx(
        np.log(1 / 3),
    )
    with pytest.raises(KernelDepthError):
        kernel_log_prior(parse_kernel("(SE + LIN)"), pcfg, start_depth=3)
    with pytest.raises(KernelDepthError):
        kernel_log_prior(parse_kernel("(SE + (LIN * (GE + SE)))"), pcfg)


def test_zero_weight_base_kernel():
    pcfg = PcfgConfig(base_weights={"SE": 1.0, "LIN": 0.0, "GE": 0.0}, max_depth=2)
    assert kernel_log_prior(Leaf("LIN"), pcfg) == -np.inf
    assert {k.to_text() for k in enumerate_kernels(pcfg)} == {
        "(SE)",
        "(SE + SE)",
        "(SE * SE)",
    }


@pytest.mark.parametrize("max_depth", [1, 2, 3])
def test_prior_is_normalized(max_depth):
    pcfg = PcfgConfig(max_depth=max_depth)
    expressions = enumerate_kernels(pcfg)
    assert len({k.to_text() for k in expressions}) == len(expressions)
    total = sum(np.exp(kernel_log_prior(k, pcfg)) for k in expressions)
    assert total == pytest.approx(1.0)


def test_sampling_recovers_the_prior():
    pcfg = PcfgConfig(max_depth=2)
    rng = np.random.default_rng(2024)
    n_draws = 3000
    counts = Counter(sample_kernel(pcfg, rng).to_text() for _ in range(n_draws))
    expressions = enumerate_kernels(pcfg)
    observed = np.array([counts.get(k.to_text(), 0) for k in expressions])
    assert observed.sum() == n_draws
    expected = n_draws * np.exp([kernel_log_prior(k, pcfg) for k in expressions])
    assert chisquare(observed, expected).pvalue > 1e-3


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), start_depth=st.integers(1, 4))
def test_samples_respect_the_depth_cap(seed, start_depth):
    pcfg = PcfgConfig(max_depth=4)
    k = sample_kernel(pcfg, np.random.default_rng(seed), start_depth=start_depth)
    assert k.depth <= pcfg.max_depth - start_depth + 1
    assert np.isfinite(kernel_log_prior(k, pcfg, start_depth=start_depth))


def test_depth_one_grammar_only_yields_leaves(rng):
    pcfg = PcfgConfig(max_depth=1)
    assert all(sample_kernel(pcfg, rng).is_leaf for _ in range(20))
