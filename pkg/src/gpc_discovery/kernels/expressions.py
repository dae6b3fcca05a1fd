"""Kernel expression trees, their parameters and their evaluation."""

import re
from abc import ABC, abstractmethod
from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from gpc_discovery.exceptions import (
    KernelDimensionError,
    KernelParsingError,
)
from gpc_discovery.kernels.base import BaseKernel, BaseKernelRegistry, check_inputs


class Operator(Enum):
    """Binary operators combining two kernels."""

    SUM = "+"
    PRODUCT = "*"


class KernelExpression(ABC):
    """Base class for kernel expression trees.

    Expressions only carry the structure of the kernel. Parameters are stored
    in flat vectors whose order is the left-to-right depth-first order of the
    leaves.
    """

    @property
    @abstractmethod
    def depth(self) -> int:
        """Depth of the tree, a leaf has depth 1."""

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of nodes in the tree."""

    @abstractmethod
    def leaves(self) -> Iterator["Leaf"]:
        """Iterate over leaves in canonical (depth-first, left-to-right) order."""

    @abstractmethod
    def _inner_text(self) -> str:
        """Text form when nested in a composite."""

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        """Structure as a JSON-serializable dictionnary."""

    @property
    def is_leaf(self) -> bool:
        """Whether the expression is a single base kernel."""
        return False

    @property
    def param_dim(self) -> int:
        """Number of scalar parameters, sum of the leaves' arities."""
        return sum(leaf.base.arity for leaf in self.leaves())

    def to_text(self) -> str:
        """Parenthesized text form, for example '(LIN + (SE * GE))'.

        Returns
        -------
        str
            Text form of the expression.
        """
        return self._inner_text()

    def __str__(self) -> str:
        """Text form of the expression.

        Returns
        -------
        str
            Parenthesized text form.
        """
        return self.to_text()


@dataclass(frozen=True)
class Leaf(KernelExpression):
    """Single base kernel.

    Parameters
    ----------
    kind : str
        Tag of the base kernel, for example 'SE'.
    tag : int | None, optional
        Bookkeeping label used during tree surgery, ignored by equality.
        , by default None
    """

    kind: str
    tag: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        """Check that the kind is registered."""
        BaseKernelRegistry.get(self.kind)

    @property
    def base(self) -> BaseKernel:
        """Base kernel object."""
        return BaseKernelRegistry.get(self.kind)

    @property
    def depth(self) -> int:
        """Depth of a leaf: 1."""
        return 1

    @property
    def size(self) -> int:
        """A leaf is a single node."""
        return 1

    @property
    def is_leaf(self) -> bool:
        """A leaf is a leaf."""
        return True

    def leaves(self) -> Iterator["Leaf"]:
        """Yield the leaf itself."""
        yield self

    def to_text(self) -> str:
        """Top-level text form, always parenthesized.

        Returns
        -------
        str
            For example '(SE)'.
        """
        return f"({self.kind})"

    def _inner_text(self) -> str:
        return self.kind

    def to_dict(self) -> dict[str, Any]:
        """Structure as a dictionnary.

        Returns
        -------
        dict[str, Any]
            {'kind': tag}.
        """
        return {"kind": self.kind}


@dataclass(frozen=True)
class Composite(KernelExpression):
    """Sum or product of two kernel expressions.

    Parameters
    ----------
    op : Operator
        Combination operator.
    left : KernelExpression
        Left operand.
    right : KernelExpression
        Right operand.
    """

    op: Operator
    left: KernelExpression
    right: KernelExpression

    @property
    def depth(self) -> int:
        """1 + the depth of the deepest child."""
        return 1 + max(self.left.depth, self.right.depth)

    @property
    def size(self) -> int:
        """1 + the number of nodes of both children."""
        return 1 + self.left.size + self.right.size

    def leaves(self) -> Iterator[Leaf]:
        """Yield left leaves first, then right leaves."""
        yield from self.left.leaves()
        yield from self.right.leaves()

    def _inner_text(self) -> str:
        left = self.left._inner_text()
        right = self.right._inner_text()
        return f"({left} {self.op.value} {right})"

    def to_dict(self) -> dict[str, Any]:
        """Structure as a nested dictionnary.

        Returns
        -------
        dict[str, Any]
            {'op': '+' or '*', 'left': ..., 'right': ...}.
        """
        return {
            "op": self.op.value,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }


def Sum(left: KernelExpression, right: KernelExpression) -> Composite:  # noqa: N802
    """Build left + right."""
    return Composite(Operator.SUM, left, right)


def Product(left: KernelExpression, right: KernelExpression) -> Composite:  # noqa: N802
    """Build left * right."""
    return Composite(Operator.PRODUCT, left, right)


def param_dim(k: KernelExpression) -> int:
    """Number of real-valued parameters of a kernel expression.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.

    Returns
    -------
    int
        Sum of the leaves' arities.
    """
    return k.param_dim


def param_names(k: KernelExpression) -> list[str]:
    """Names of the parameters, in canonical order.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.

    Returns
    -------
    list[str]
        Names as '<leaf index>:<tag>.<parameter>', for example '0:SE.lengthscale'.
    """
    return [
        f"{i}:{leaf.kind}.{name}"
        for i, leaf in enumerate(k.leaves())
        for name in leaf.base.param_names
    ]


def _check_length(k: KernelExpression, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.shape[0] != k.param_dim:
        error_msg = (
            f"Kernel {k.to_text()} expects {k.param_dim} parameters, "
            f"got an array of shape {values.shape}."
        )
        raise KernelDimensionError(error_msg)
    return values


def _split(k: KernelExpression, values: np.ndarray) -> list[np.ndarray]:
    """Split a flat parameter vector into one chunk per leaf."""
    chunks = []
    offset = 0
    for leaf in k.leaves():
        arity = leaf.base.arity
        chunks.append(values[offset : offset + arity])
        offset += arity
    return chunks


def _apply_transforms(k: KernelExpression, theta_u: np.ndarray, method: str):
    theta_u = _check_length(k, theta_u)
    out = np.empty_like(theta_u)
    offset = 0
    for leaf in k.leaves():
        for transform in leaf.base.transforms:
            out[offset] = getattr(transform, method)(theta_u[offset])
            offset += 1
    return out


def transform_params(k: KernelExpression, theta_u: np.ndarray) -> np.ndarray:
    """Map unconstrained parameters to constrained ones.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    theta_u : np.ndarray
        Unconstrained parameters, in canonical order.

    Returns
    -------
    np.ndarray
        Constrained parameters.

    Raises
    ------
    KernelDimensionError
        If the length doesn't match param_dim(k).
    """
    return _apply_transforms(k, theta_u, "forward")


def inverse_transform_params(k: KernelExpression, params: np.ndarray) -> np.ndarray:
    """Map constrained parameters back to unconstrained ones.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    params : np.ndarray
        Constrained parameters, in canonical order.

    Returns
    -------
    np.ndarray
        Unconstrained parameters.
    """
    return _apply_transforms(k, params, "inverse")


def transform_derivatives(k: KernelExpression, theta_u: np.ndarray) -> np.ndarray:
    """Elementwise derivative of the constrained parameters.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    theta_u : np.ndarray
        Unconstrained parameters.

    Returns
    -------
    np.ndarray
        d(params)/d(theta_u), elementwise.
    """
    return _apply_transforms(k, theta_u, "derivative")


def log_abs_det_jacobian(k: KernelExpression, theta_u: np.ndarray) -> float:
    """Log-absolute determinant of the transformation's Jacobian.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    theta_u : np.ndarray
        Unconstrained parameters.

    Returns
    -------
    float
        Sum of the elementwise log-absolute derivatives.
    """
    return float(np.sum(_apply_transforms(k, theta_u, "log_abs_det_jacobian")))


def _gram(
    node: KernelExpression,
    chunks: Iterator[np.ndarray],
    X: np.ndarray,
    X2: np.ndarray,
) -> np.ndarray:
    if isinstance(node, Leaf):
        params = next(chunks)
        node.base.check_params(params)
        return node.base.gram(params, X, X2)
    left = _gram(node.left, chunks, X, X2)
    right = _gram(node.right, chunks, X, X2)
    if node.op is Operator.SUM:
        return left + right
    return left * right


def gram_matrix(
    k: KernelExpression,
    params: np.ndarray,
    X: np.ndarray,
    X2: np.ndarray | None = None,
) -> np.ndarray:
    """Gram matrix between the rows of X and X2.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    params : np.ndarray
        Constrained parameters in canonical order.
    X : np.ndarray
        n x d inputs.
    X2 : np.ndarray | None, optional
        m x d inputs, X itself if None., by default None

    Returns
    -------
    np.ndarray
        n x m matrix. Exactly symmetric when X2 is None or is X.

    Raises
    ------
    KernelDimensionError
        If the parameters or the inputs have inconsistent shapes.
    """
    params = _check_length(k, params)
    X = np.asarray(X, dtype=float)
    symmetric = X2 is None or X2 is X
    X2 = X if X2 is None else np.asarray(X2, dtype=float)
    check_inputs(X, X2)
    gram = _gram(k, iter(_split(k, params)), X, X2)
    if symmetric:
        gram = 0.5 * (gram + gram.T)
    return gram


def _diagonal(
    node: KernelExpression,
    chunks: Iterator[np.ndarray],
    X: np.ndarray,
) -> np.ndarray:
    if isinstance(node, Leaf):
        return node.base.gram_diagonal(next(chunks), X)
    left = _diagonal(node.left, chunks, X)
    right = _diagonal(node.right, chunks, X)
    if node.op is Operator.SUM:
        return left + right
    return left * right


def gram_diagonal(k: KernelExpression, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Values k(x, x) for every row x of X, without building the Gram matrix.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    params : np.ndarray
        Constrained parameters in canonical order.
    X : np.ndarray
        n x d inputs.

    Returns
    -------
    np.ndarray
        Length n diagonal.
    """
    params = _check_length(k, params)
    X = np.asarray(X, dtype=float)
    check_inputs(X, X)
    return _diagonal(k, iter(_split(k, params)), X)


def eval_kernel(
    k: KernelExpression,
    params: np.ndarray,
    x: np.ndarray,
    x2: np.ndarray,
) -> float:
    """Evaluate the kernel on a pair of feature vectors.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    params : np.ndarray
        Constrained parameters in canonical order.
    x : np.ndarray
        First feature vector.
    x2 : np.ndarray
        Second feature vector.

    Returns
    -------
    float
        k(x, x2).

    Raises
    ------
    KernelDimensionError
        If the vectors have different lengths.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.ndim != 1 or x.shape != x2.shape:
        error_msg = f"Feature vectors of shapes {x.shape} and {x2.shape} differ."
        raise KernelDimensionError(error_msg)
    return float(gram_matrix(k, params, x[None, :], x2[None, :])[0, 0])


def _gram_and_derivatives(
    node: KernelExpression,
    chunks: Iterator[np.ndarray],
    X: np.ndarray,
) -> tuple[np.ndarray, list[np.ndarray]]:
    if isinstance(node, Leaf):
        theta_u = next(chunks)
        base = node.base
        params = np.array([t.forward(z) for t, z in zip(base.transforms, theta_u)])
        slopes = [t.derivative(z) for t, z in zip(base.transforms, theta_u)]
        gram = base.gram(params, X, X)
        derivatives = base.gram_derivatives(params, X, X)
        return gram, [d * s for d, s in zip(derivatives, slopes)]
    gram_l, derivatives_l = _gram_and_derivatives(node.left, chunks, X)
    gram_r, derivatives_r = _gram_and_derivatives(node.right, chunks, X)
    if node.op is Operator.SUM:
        return gram_l + gram_r, derivatives_l + derivatives_r
    derivatives = [d * gram_r for d in derivatives_l]
    derivatives += [gram_l * d for d in derivatives_r]
    return gram_l * gram_r, derivatives


def gram_matrix_gradients(
    k: KernelExpression,
    theta_u: np.ndarray,
    X: np.ndarray,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Gram matrix of X and its derivatives w.r.t. the unconstrained parameters.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    theta_u : np.ndarray
        Unconstrained parameters in canonical order.
    X : np.ndarray
        n x d inputs.

    Returns
    -------
    tuple[np.ndarray, list[np.ndarray]]
        Symmetric n x n Gram matrix and one n x n derivative per parameter.
    """
    theta_u = _check_length(k, theta_u)
    X = np.asarray(X, dtype=float)
    check_inputs(X, X)
    gram, derivatives = _gram_and_derivatives(k, iter(_split(k, theta_u)), X)
    gram = 0.5 * (gram + gram.T)
    derivatives = [0.5 * (d + d.T) for d in derivatives]
    return gram, derivatives


_TOKENS = re.compile(r"\s*(?:(?P<paren>[()])|(?P<op>[+*])|(?P<tag>[A-Za-z_]\w*))")


def _tokenize(text: str) -> list[str]:
    tokens = []
    position = 0
    text = text.rstrip()
    while position < len(text):
        match = _TOKENS.match(text, position)
        if match is None:
            error_msg = f"Unexpected character at position {position} in '{text}'."
            raise KernelParsingError(error_msg)
        tokens.append(match.group(match.lastgroup))
        position = match.end()
    return tokens


class _KernelParser:
    """Recursive descent parser for the parenthesized text form."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.position = 0

    def _peek(self) -> str | None:
        if self.position < len(self.tokens):
            return self.tokens[self.position]
        return None

    def _next(self) -> str:
        token = self._peek()
        if token is None:
            error_msg = f"Unexpected end of kernel text '{self.text}'."
            raise KernelParsingError(error_msg)
        self.position += 1
        return token

    def _expect(self, expected: str) -> None:
        token = self._next()
        if token != expected:
            error_msg = f"Expected '{expected}', got '{token}' in '{self.text}'."
            raise KernelParsingError(error_msg)

    def parse(self) -> KernelExpression:
        expression = self._node()
        if self._peek() is not None:
            error_msg = f"Trailing tokens after kernel in '{self.text}'."
            raise KernelParsingError(error_msg)
        return expression

    def _node(self) -> KernelExpression:
        token = self._next()
        if token == "(":
            left = self._node()
            if self._peek() in ("+", "*"):
                op = Operator(self._next())
                right = self._node()
                self._expect(")")
                return Composite(op, left, right)
            self._expect(")")
            return left
        if token in (")", "+", "*"):
            error_msg = f"Unexpected '{token}' in '{self.text}'."
            raise KernelParsingError(error_msg)
        return Leaf(token.upper())


def parse_kernel(text: str) -> KernelExpression:
    """Parse the parenthesized text form of a kernel expression.

    Parameters
    ----------
    text : str
        Text form, for example '(LIN + (SE * GE))' or '(LIN)'.

    Returns
    -------
    KernelExpression
        Parsed expression.

    Raises
    ------
    KernelParsingError
        If the text is not a well-formed expression.
    UnknownBaseKernelError
        If a leaf tag is not registered.

    Examples
    --------
    >>> parse_kernel("(SE * GE)").to_text()
    '(SE * GE)'
    """
    return _KernelParser(text).parse()


def kernel_from_dict(structure: dict[str, Any]) -> KernelExpression:
    """Rebuild an expression from its dictionnary form.

    Parameters
    ----------
    structure : dict[str, Any]
        Output of KernelExpression.to_dict.

    Returns
    -------
    KernelExpression
        Rebuilt expression.

    Raises
    ------
    KernelParsingError
        If the dictionnary is malformed.
    """
    if "kind" in structure:
        return Leaf(structure["kind"])
    try:
        op = Operator(structure["op"])
        left = kernel_from_dict(structure["left"])
        right = kernel_from_dict(structure["right"])
    except (KeyError, ValueError, TypeError) as error:
        error_msg = f"Malformed kernel structure: {structure}."
        raise KernelParsingError(error_msg) from error
    return Composite(op, left, right)


def kernel_to_json(
    k: KernelExpression,
    params: np.ndarray,
    log_prior: float | None = None,
) -> dict[str, Any]:
    """JSON form of a kernel: structure, constrained parameters and log-prior.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    params : np.ndarray
        Constrained parameters.
    log_prior : float | None, optional
        Log-prior of the structure, omitted if None., by default None

    Returns
    -------
    dict[str, Any]
        JSON-serializable dictionnary.
    """
    params = _check_length(k, params)
    content = {
        "structure": k.to_text(),
        "tree": k.to_dict(),
        "params": dict(zip(param_names(k), params.tolist())),
    }
    if log_prior is not None:
        content["log_prior"] = float(log_prior)
    return content
