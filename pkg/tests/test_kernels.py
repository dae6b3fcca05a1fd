import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpc_discovery.exceptions import (
    KernelDimensionError,
    KernelParsingError,
    UnknownBaseKernelError,
)
from gpc_discovery.kernels.base import BaseKernelRegistry
from gpc_discovery.kernels.expressions import (
    Composite,
    Leaf,
    Operator,
    Product,
    Sum,
    eval_kernel,
    gram_diagonal,
    gram_matrix,
    gram_matrix_gradients,
    inverse_transform_params,
    kernel_from_dict,
    kernel_to_json,
    log_abs_det_jacobian,
    param_names,
    parse_kernel,
    transform_derivatives,
    transform_params,
)
from gpc_discovery.kernels.transforms import (
    ExpTransform,
    IdentityTransform,
    ScaledLogisticTransform,
)

TAGS = ["LIN", "SE", "GE"]

kernels = st.recursive(
    st.sampled_from(TAGS).map(Leaf),
    lambda children: st.builds(
        Composite,
        st.sampled_from(list(Operator)),
        children,
        children,
    ),
    max_leaves=6,
)

TRANSFORMS = [IdentityTransform(), ExpTransform(), ScaledLogisticTransform(2.0)]


def test_registered_base_kernels():
    assert BaseKernelRegistry.tags() == TAGS
    assert [BaseKernelRegistry.get(tag).arity for tag in TAGS] == [2, 1, 2]


@pytest.mark.parametrize("transform", TRANSFORMS, ids=repr)
@given(z=st.floats(min_value=-8, max_value=8))
def test_transform_inverse(transform, z):
    assert transform.inverse(transform.forward(z)) == pytest.approx(z, abs=1e-8)


@pytest.mark.parametrize("transform", TRANSFORMS, ids=repr)
@given(z=st.floats(min_value=-8, max_value=8))
def test_transform_derivative_and_jacobian(transform, z):
    h = 1e-6
    finite_difference = (transform.forward(z + h) - transform.forward(z - h)) / (2 * h)
    derivative = transform.derivative(z)
    assert derivative == pytest.approx(finite_difference, rel=1e-5, abs=1e-8)
    assert transform.log_abs_det_jacobian(z) == pytest.approx(
        np.log(np.abs(derivative)),
    )


def test_scaled_logistic_range():
    transform = ScaledLogisticTransform(upper=2.0)
    values = transform.forward(np.linspace(-30, 30, 61))
    assert np.all(values > 0)
    assert np.all(values < 2)


@pytest.mark.parametrize(
    "text",
    ["(SE)", "(LIN + SE)", "(LIN + (SE * GE))", "((GE * LIN) + (SE + SE))"],
)
def test_parse_print(text):
    assert parse_kernel(text).to_text() == text


def test_parse_is_case_and_space_insensitive():
    assert parse_kernel("( lin +  (se*ge) )") == parse_kernel("(LIN + (SE * GE))")
    assert parse_kernel("(lin)") == Leaf("LIN")
    assert parse_kernel("SE") == Leaf("SE")


@pytest.mark.parametrize(
    "text",
    ["(SE +", "SE)", "(SE LIN)", "(+ SE)", "", "(SE - LIN)"],
)
def test_parse_errors(text):
    with pytest.raises(KernelParsingError):
        parse_kernel(text)


def test_unknown_base_kernel():
    with pytest.raises(UnknownBaseKernelError):
        parse_kernel("(SE + PER)")
    with pytest.raises(UnknownBaseKernelError):
        Leaf("PER")


@settings(max_examples=50, deadline=None)
@given(k=kernels)
def test_text_form_is_parsed_back(k):
    assert parse_kernel(k.to_text()) == k
    assert kernel_from_dict(k.to_dict()) == k


def test_shape_properties():
    k = parse_kernel("(LIN + (SE * GE))")
    assert k.depth == 3
    assert k.size == 5
    assert k.param_dim == 5
    assert [leaf.kind for leaf in k.leaves()] == ["LIN", "SE", "GE"]
    assert param_names(k) == [
        "0:LIN.alpha",
        "0:LIN.offset",
        "1:SE.lengthscale",
        "2:GE.lengthscale",
        "2:GE.gamma",
    ]


def test_param_transforms():
    k = parse_kernel("(LIN + (SE * GE))")
    theta_u = np.array([0.0, -0.5, np.log(2.0), 0.0, 0.0])
    params = transform_params(k, theta_u)
    np.testing.assert_allclose(params, [1.0, -0.5, 2.0, 1.0, 1.0])
    np.testing.assert_allclose(
        inverse_transform_params(k, params),
        theta_u,
        atol=1e-12,
    )
    np.testing.assert_allclose(
        transform_derivatives(k, theta_u),
        [1.0, 1.0, 2.0, 1.0, -0.5],
    )
    assert log_abs_det_jacobian(k, theta_u) == pytest.approx(np.log(2.0) + np.log(0.5))
    with pytest.raises(KernelDimensionError):
        transform_params(k, np.zeros(4))


def test_base_kernel_values():
    X = np.array([[0.0], [1.0], [2.0]])
    se = gram_matrix(Leaf("SE"), np.array([1.0]), X)
    assert se[0, 1] == pytest.approx(np.exp(-0.5))
    assert se[0, 2] == pytest.approx(np.exp(-2.0))
    lin = gram_matrix(Leaf("LIN"), np.array([1.0, 0.0]), X)
    np.testing.assert_allclose(lin, 1.0 + X @ X.T)
    ge = gram_matrix(Leaf("GE"), np.array([1.0, 1.0]), X)
    assert ge[0, 2] == pytest.approx(np.exp(-2.0))
    assert eval_kernel(Leaf("SE"), np.array([1.0]), X[0], X[1]) == pytest.approx(
        np.exp(-0.5),
    )


def test_composite_values(rng):
    X = rng.standard_normal((6, 2))
    se_params, lin_params = np.array([0.7]), np.array([0.5, 0.2])
    se = gram_matrix(Leaf("SE"), se_params, X)
    lin = gram_matrix(Leaf("LIN"), lin_params, X)
    params = np.concatenate([se_params, lin_params])
    np.testing.assert_allclose(
        gram_matrix(Sum(Leaf("SE"), Leaf("LIN")), params, X),
        se + lin,
    )
    np.testing.assert_allclose(
        gram_matrix(Product(Leaf("SE"), Leaf("LIN")), params, X),
        se * lin,
    )


def test_cross_gram_and_diagonal(rng):
    k = parse_kernel("(LIN + (SE * GE))")
    params = transform_params(k, 0.3 * rng.standard_normal(k.param_dim))
    X, X2 = rng.standard_normal((5, 3)), rng.standard_normal((4, 3))
    cross = gram_matrix(k, params, X, X2)
    assert cross.shape == (5, 4)
    np.testing.assert_allclose(
        gram_diagonal(k, params, X),
        np.diag(gram_matrix(k, params, X)),
    )
    with pytest.raises(KernelDimensionError):
        gram_matrix(k, params, X, X2[:, :2])


@settings(max_examples=40, deadline=None)
@given(k=kernels, seed=st.integers(0, 2**16))
def test_gram_is_positive_semidefinite(k, seed):
    draws = np.random.default_rng(seed)
    X = draws.standard_normal((8, 2))
    params = transform_params(k, 0.5 * draws.standard_normal(k.param_dim))
    gram = gram_matrix(k, params, X)
    np.testing.assert_allclose(gram, gram.T, atol=1e-12)
    scale = max(1.0, float(np.max(np.abs(gram))))
    assert np.linalg.eigvalsh(gram).min() >= -1e-8 * scale


@pytest.mark.parametrize("text", ["(SE)", "(LIN)", "(GE)", "(LIN + (SE * GE))"])
def test_gram_gradients_match_finite_differences(text, rng):
    k = parse_kernel(text)
    X = rng.standard_normal((5, 2))
    theta_u = 0.3 * rng.standard_normal(k.param_dim)
    gram, derivatives = gram_matrix_gradients(k, theta_u, X)
    np.testing.assert_allclose(gram, gram_matrix(k, transform_params(k, theta_u), X))
    assert len(derivatives) == k.param_dim
    h = 1e-6
    for i, derivative in enumerate(derivatives):
        step = np.zeros(k.param_dim)
        step[i] = h
        upper = gram_matrix(k, transform_params(k, theta_u + step), X)
        lower = gram_matrix(k, transform_params(k, theta_u - step), X)
        finite_difference = (upper - lower) / (2 * h)
        np.testing.assert_allclose(derivative, finite_difference, rtol=1e-5, atol=1e-7)


def test_kernel_to_json():
    k = parse_kernel("(SE * LIN)")
    content = kernel_to_json(k, np.array([1.5, 0.5, 0.0]), log_prior=-2.0)
    assert content["structure"] == "(SE * LIN)"
    assert content["params"] == {
        "0:SE.lengthscale": 1.5,
        "1:LIN.alpha": 0.5,
        "1:LIN.offset": 0.0,
    }
    assert content["log_prior"] == -2.0
    assert kernel_from_dict(content["tree"]) == k
