"""Probabilistic context-free grammar over kernel expressions."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from gpc_discovery.exceptions import ConfigurationError, KernelDepthError
from gpc_discovery.kernels.base import BaseKernelRegistry
from gpc_discovery.kernels.expressions import (
    Composite,
    KernelExpression,
    Leaf,
    Operator,
)

_NORMALIZATION_TOLERANCE = 1e-9


def _uniform_base_weights() -> dict[str, float]:
    tags = BaseKernelRegistry.tags()
    return {tag: 1 / len(tags) for tag in tags}


@dataclass(frozen=True)
class PcfgConfig:
    """Production probabilities of the kernel grammar.

    k -> B with probability p_leaf, k -> (k + k) with p_sum and
    k -> (k * k) with p_product. B -> base kernel with base_weights.
    The root has depth 1 and a leaf is forced at depth max_depth.

    Parameters
    ----------
    p_leaf : float, optional
        Probability of a leaf production., by default 0.5
    p_sum : float, optional
        Probability of a sum production., by default 0.25
    p_product : float, optional
        Probability of a product production., by default 0.25
    base_weights : dict[str, float], optional
        Categorical weights over base kernel tags., by default uniform over
        every registered base kernel.
    max_depth : int, optional
        Maximum tree depth., by default 4
    """

    p_leaf: float = 0.5
    p_sum: float = 0.25
    p_product: float = 0.25
    base_weights: dict[str, float] = field(default_factory=_uniform_base_weights)
    max_depth: int = 4

    def __post_init__(self) -> None:
        """Validate the probabilities.

        Raises
        ------
        ConfigurationError
            If a probability is out of range or a distribution is not normalized.
        """
        if not 0 < self.p_leaf < 1:
            error_msg = f"p_leaf must be in (0, 1), got {self.p_leaf}."
            raise ConfigurationError(error_msg)
        if self.p_sum <= 0 or self.p_product <= 0:
            error_msg = (
                "p_sum and p_product must be positive, "
                f"got {self.p_sum} and {self.p_product}."
            )
            raise ConfigurationError(error_msg)
        total = self.p_leaf + self.p_sum + self.p_product
        if abs(total - 1) > _NORMALIZATION_TOLERANCE:
            error_msg = f"p_leaf + p_sum + p_product must equal 1, got {total}."
            raise ConfigurationError(error_msg)
        if not self.base_weights:
            error_msg = "base_weights can't be empty."
            raise ConfigurationError(error_msg)
        for tag, weight in self.base_weights.items():
            if not BaseKernelRegistry.has(tag):
                error_msg = (
                    f"Unknown base kernel '{tag}' in base_weights. "
                    f"Registered kernels: {BaseKernelRegistry.tags()}."
                )
                raise ConfigurationError(error_msg)
            if weight < 0:
                error_msg = f"Weight of {tag} must be non-negative, got {weight}."
                raise ConfigurationError(error_msg)
        weights_total = sum(self.base_weights.values())
        if abs(weights_total - 1) > _NORMALIZATION_TOLERANCE:
            error_msg = f"base_weights must sum to 1, got {weights_total}."
            raise ConfigurationError(error_msg)
        if not isinstance(self.max_depth, int) or self.max_depth < 1:
            error_msg = f"max_depth must be a positive integer, got {self.max_depth}."
            raise ConfigurationError(error_msg)

    def production_probabilities(self, depth: int) -> dict[str, float]:
        """Production probabilities at a given depth, leaf forced at max_depth.

        Parameters
        ----------
        depth : int
            Depth of the node being expanded (root is 1).

        Returns
        -------
        dict[str, float]
            Probabilities of 'leaf', '+' and '*'.
        """
        if depth >= self.max_depth:
            return {"leaf": 1.0, Operator.SUM.value: 0.0, Operator.PRODUCT.value: 0.0}
        return {
            "leaf": self.p_leaf,
            Operator.SUM.value: self.p_sum,
            Operator.PRODUCT.value: self.p_product,
        }

    def to_dict(self) -> dict:
        """Configuration as a dictionnary.

        Returns
        -------
        dict
            Field name -> value.
        """
        return {
            "p_leaf": self.p_leaf,
            "p_sum": self.p_sum,
            "p_product": self.p_product,
            "base_weights": dict(self.base_weights),
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_dict(cls, content: dict) -> "PcfgConfig":
        """Build the grammar from its dictionnary form.

        Parameters
        ----------
        content : dict
            Output of to_dict, missing keys take their default value.

        Returns
        -------
        PcfgConfig
            Grammar.
        """
        content = dict(content)
        if "base_weights" in content:
            content["base_weights"] = {
                str(tag).upper(): float(weight)
                for tag, weight in content["base_weights"].items()
            }
        return cls(**content)


def sample_kernel(
    pcfg: PcfgConfig,
    rng: np.random.Generator,
    start_depth: int = 1,
) -> KernelExpression:
    """Draw a kernel expression from the grammar.

    Parameters
    ----------
    pcfg : PcfgConfig
        Grammar.
    rng : np.random.Generator
        Random stream.
    start_depth : int, optional
        Depth of the generated root, used to regenerate subtrees., by default 1

    Returns
    -------
    KernelExpression
        Sampled expression, its depth is at most max_depth - start_depth + 1.
    """
    probabilities = pcfg.production_probabilities(start_depth)
    productions = list(probabilities.keys())
    choice = rng.choice(len(productions), p=list(probabilities.values()))
    production = productions[choice]
    if production == "leaf":
        tags = list(pcfg.base_weights.keys())
        tag_index = rng.choice(len(tags), p=list(pcfg.base_weights.values()))
        return Leaf(tags[tag_index])
    left = sample_kernel(pcfg, rng, start_depth + 1)
    right = sample_kernel(pcfg, rng, start_depth + 1)
    return Composite(Operator(production), left, right)


def _log(probability: float) -> float:
    if probability <= 0:
        return -np.inf
    return float(np.log(probability))


def kernel_log_prior(
    k: KernelExpression,
    pcfg: PcfgConfig,
    start_depth: int = 1,
) -> float:
    """Log-probability of generating k from the grammar.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    pcfg : PcfgConfig
        Grammar.
    start_depth : int, optional
        Depth of k's root, used for the generation probability of subtrees.
        , by default 1

    Returns
    -------
    float
        Sum of the log-probabilities of the productions generating k.

    Raises
    ------
    KernelDepthError
        If k is deeper than the grammar allows.
    """
    total_depth = start_depth - 1 + k.depth
    if total_depth > pcfg.max_depth:
        raise KernelDepthError(total_depth, pcfg.max_depth)
    return _log_prior(k, pcfg, start_depth)


def _log_prior(k: KernelExpression, pcfg: PcfgConfig, depth: int) -> float:
    probabilities = pcfg.production_probabilities(depth)
    if isinstance(k, Leaf):
        weight = pcfg.base_weights.get(k.kind, 0.0)
        return _log(probabilities["leaf"]) + _log(weight)
    log_production = _log(probabilities[k.op.value])
    left = _log_prior(k.left, pcfg, depth + 1)
    right = _log_prior(k.right, pcfg, depth + 1)
    return log_production + left + right


def enumerate_kernels(
    pcfg: PcfgConfig,
    start_depth: int = 1,
) -> list[KernelExpression]:
    """Every expression with a non-zero probability under the grammar.

    Parameters
    ----------
    pcfg : PcfgConfig
        Grammar, its depth cap makes the enumeration finite.
    start_depth : int, optional
        Depth of the enumerated roots., by default 1

    Returns
    -------
    list[KernelExpression]
        Leaves first, then composites.
    """
    probabilities = pcfg.production_probabilities(start_depth)
    expressions: list[KernelExpression] = []
    if probabilities["leaf"] > 0:
        expressions += [
            Leaf(tag) for tag, weight in pcfg.base_weights.items() if weight > 0
        ]
    operators = [op for op in Operator if probabilities[op.value] > 0]
    if not operators:
        return expressions
    children = enumerate_kernels(pcfg, start_depth + 1)
    for op in operators:
        expressions += [
            Composite(op, left, right) for left, right in product(children, children)
        ]
    return expressions
