"""Kernel expressions, their grammar and tree surgery."""

from gpc_discovery.kernels.base import (
    BaseKernel,
    BaseKernelRegistry,
    GammaExp,
    Linear,
    SquaredExp,
    register_base_kernel,
)
from gpc_discovery.kernels.expressions import (
    Composite,
    KernelExpression,
    Leaf,
    Operator,
    Product,
    Sum,
    eval_kernel,
    gram_matrix,
    gram_matrix_gradients,
    inverse_transform_params,
    kernel_from_dict,
    kernel_to_json,
    log_abs_det_jacobian,
    param_dim,
    parse_kernel,
    transform_params,
)
from gpc_discovery.kernels.grammar import (
    PcfgConfig,
    enumerate_kernels,
    kernel_log_prior,
    sample_kernel,
)
from gpc_discovery.kernels.surgery import (
    SurgeryResult,
    detach_reattach,
    list_subtrees,
    remap_params,
    replace_subtree,
)

__all__ = [
    "BaseKernel",
    "BaseKernelRegistry",
    "Composite",
    "GammaExp",
    "KernelExpression",
    "Leaf",
    "Linear",
    "Operator",
    "PcfgConfig",
    "Product",
    "SquaredExp",
    "Sum",
    "SurgeryResult",
    "detach_reattach",
    "enumerate_kernels",
    "eval_kernel",
    "gram_matrix",
    "gram_matrix_gradients",
    "inverse_transform_params",
    "kernel_from_dict",
    "kernel_log_prior",
    "kernel_to_json",
    "list_subtrees",
    "log_abs_det_jacobian",
    "param_dim",
    "parse_kernel",
    "register_base_kernel",
    "remap_params",
    "replace_subtree",
    "sample_kernel",
    "transform_params",
]
