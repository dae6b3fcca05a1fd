"""Base kernels: the terminal symbols of the kernel grammar."""

from abc import ABC, abstractmethod
from typing import ClassVar

import numpy as np
from scipy.spatial.distance import cdist

from gpc_discovery.exceptions import KernelDimensionError, UnknownBaseKernelError
from gpc_discovery.kernels.transforms import (
    BaseTransform,
    ExpTransform,
    IdentityTransform,
    ScaledLogisticTransform,
)


class BaseKernel(ABC):
    """Base class to implement base kernels.

    Subclasses evaluate Gram matrices from constrained parameters and provide
    the Gram matrix derivative with respect to each constrained parameter.
    """

    tag: str
    param_names: tuple[str, ...]
    transforms: tuple[BaseTransform, ...]

    @property
    def arity(self) -> int:
        """Number of scalar parameters."""
        return len(self.param_names)

    @property
    def is_stationary(self) -> bool:
        """Whether the kernel only depends on x - x'."""
        return True

    @abstractmethod
    def gram(self, params: np.ndarray, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
        """Gram matrix between the rows of X and X2."""

    @abstractmethod
    def gram_derivatives(
        self,
        params: np.ndarray,
        X: np.ndarray,
        X2: np.ndarray,
    ) -> list[np.ndarray]:
        """Gram matrix derivatives with respect to each constrained parameter."""

    def gram_diagonal(self, params: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Values k(x, x) for every row x of X.

        Parameters
        ----------
        params : np.ndarray
            Constrained parameters.
        X : np.ndarray
            n x d inputs.

        Returns
        -------
        np.ndarray
            Length n diagonal.
        """
        return np.array([self.gram(params, x[None, :], x[None, :])[0, 0] for x in X])

    def check_params(self, params: np.ndarray) -> None:
        """Verify the number of parameters.

        Parameters
        ----------
        params : np.ndarray
            Constrained parameters.

        Raises
        ------
        KernelDimensionError
            If the length doesn't match the kernel's arity.
        """
        if len(params) != self.arity:
            error_msg = (
                f"{self.tag} expects {self.arity} parameters, got {len(params)}."
            )
            raise KernelDimensionError(error_msg)

    def __repr__(self) -> str:
        """Represent the kernel by its tag.

        Returns
        -------
        str
            Kernel tag.
        """
        return self.tag


class Linear(BaseKernel):
    """Linear kernel: alpha + (x - w)^T (x' - w), alpha > 0.

    The offset w is a single scalar broadcast over every input dimension.
    """

    tag = "LIN"
    param_names = ("alpha", "offset")
    transforms = (ExpTransform(), IdentityTransform())

    @property
    def is_stationary(self) -> bool:
        """Linear kernel is not stationary."""
        return False

    def gram(self, params: np.ndarray, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
        """Compute alpha + (X - w)(X2 - w)^T.

        Parameters
        ----------
        params : np.ndarray
            (alpha, offset).
        X : np.ndarray
            n x d inputs.
        X2 : np.ndarray
            m x d inputs.

        Returns
        -------
        np.ndarray
            n x m Gram matrix.
        """
        alpha, offset = params
        return alpha + (X - offset) @ (X2 - offset).T

    def gram_diagonal(self, params: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Compute alpha + |x - w|^2 for every row."""
        alpha, offset = params
        return alpha + np.sum((X - offset) ** 2, axis=1)

    def gram_derivatives(
        self,
        params: np.ndarray,
        X: np.ndarray,
        X2: np.ndarray,
    ) -> list[np.ndarray]:
        """Derivatives with respect to alpha and offset.

        Parameters
        ----------
        params : np.ndarray
            (alpha, offset).
        X : np.ndarray
            n x d inputs.
        X2 : np.ndarray
            m x d inputs.

        Returns
        -------
        list[np.ndarray]
            [dK/dalpha, dK/doffset].
        """
        _, offset = params
        d_alpha = np.ones((X.shape[0], X2.shape[0]))
        centered = X - offset
        centered2 = X2 - offset
        d_offset = -(centered.sum(axis=1)[:, None] + centered2.sum(axis=1)[None, :])
        return [d_alpha, d_offset]


class SquaredExp(BaseKernel):
    """Squared exponential kernel: exp(-|x - x'|^2 / (2 l^2)), l > 0."""

    tag = "SE"
    param_names = ("lengthscale",)
    transforms = (ExpTransform(),)

    def gram(self, params: np.ndarray, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
        """Compute exp(-D^2 / (2 l^2)).

        Parameters
        ----------
        params : np.ndarray
            (lengthscale,).
        X : np.ndarray
            n x d inputs.
        X2 : np.ndarray
            m x d inputs.

        Returns
        -------
        np.ndarray
            n x m Gram matrix.
        """
        (lengthscale,) = params
        sq_dist = cdist(X, X2, metric="sqeuclidean")
        return np.exp(-sq_dist / (2 * lengthscale**2))

    def gram_diagonal(self, params: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Stationary kernel: k(x, x) = 1."""
        return np.ones(X.shape[0])

    def gram_derivatives(
        self,
        params: np.ndarray,
        X: np.ndarray,
        X2: np.ndarray,
    ) -> list[np.ndarray]:
        """Derivative with respect to the lengthscale.

        Parameters
        ----------
        params : np.ndarray
            (lengthscale,).
        X : np.ndarray
            n x d inputs.
        X2 : np.ndarray
            m x d inputs.

        Returns
        -------
        list[np.ndarray]
            [dK/dl].
        """
        (lengthscale,) = params
        sq_dist = cdist(X, X2, metric="sqeuclidean")
        gram = np.exp(-sq_dist / (2 * lengthscale**2))
        return [gram * sq_dist / lengthscale**3]


class GammaExp(BaseKernel):
    """Gamma exponential kernel: exp(-(|x - x'| / l)^gamma), l > 0, 0 < gamma < 2."""

    tag = "GE"
    param_names = ("lengthscale", "gamma")
    transforms = (ExpTransform(), ScaledLogisticTransform(upper=2.0))

    def gram(self, params: np.ndarray, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
        """Compute exp(-(D / l)^gamma).

        Parameters
        ----------
        params : np.ndarray
            (lengthscale, gamma).
        X : np.ndarray
            n x d inputs.
        X2 : np.ndarray
            m x d inputs.

        Returns
        -------
        np.ndarray
            n x m Gram matrix.
        """
        lengthscale, gamma = params
        scaled = cdist(X, X2, metric="euclidean") / lengthscale
        return np.exp(-np.power(scaled, gamma))

    def gram_diagonal(self, params: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Stationary kernel: k(x, x) = 1."""
        return np.ones(X.shape[0])

    def gram_derivatives(
        self,
        params: np.ndarray,
        X: np.ndarray,
        X2: np.ndarray,
    ) -> list[np.ndarray]:
        """Derivatives with respect to the lengthscale and gamma.

        Parameters
        ----------
        params : np.ndarray
            (lengthscale, gamma).
        X : np.ndarray
            n x d inputs.
        X2 : np.ndarray
            m x d inputs.

        Returns
        -------
        list[np.ndarray]
            [dK/dl, dK/dgamma].
        """
        lengthscale, gamma = params
        scaled = cdist(X, X2, metric="euclidean") / lengthscale
        powered = np.power(scaled, gamma)
        gram = np.exp(-powered)
        d_lengthscale = gram * gamma * powered / lengthscale
        # s^gamma * log(s) -> 0 when s -> 0
        log_scaled = np.log(scaled, out=np.zeros_like(scaled), where=scaled > 0)
        d_gamma = -gram * powered * log_scaled
        return [d_lengthscale, d_gamma]


class BaseKernelRegistry:
    """Registry of the base kernels available to the grammar."""

    _kernels: ClassVar[dict[str, BaseKernel]] = {}

    @classmethod
    def register(cls, kernel: BaseKernel) -> None:
        """Register a base kernel under its tag.

        Parameters
        ----------
        kernel : BaseKernel
            Kernel to register.
        """
        cls._kernels[kernel.tag] = kernel

    @classmethod
    def get(cls, tag: str) -> BaseKernel:
        """Return the base kernel registered under tag.

        Parameters
        ----------
        tag : str
            Kernel tag, for example 'SE'.

        Returns
        -------
        BaseKernel
            Registered kernel.

        Raises
        ------
        UnknownBaseKernelError
            If no kernel is registered under this tag.
        """
        if tag not in cls._kernels:
            raise UnknownBaseKernelError(tag, cls.tags())
        return cls._kernels[tag]

    @classmethod
    def tags(cls) -> list[str]:
        """Registered tags, in registration order."""
        return list(cls._kernels.keys())

    @classmethod
    def has(cls, tag: str) -> bool:
        """Whether tag is registered."""
        return tag in cls._kernels


def register_base_kernel(kernel: BaseKernel) -> None:
    """Make a new base kernel available to the grammar and the parser.

    Parameters
    ----------
    kernel : BaseKernel
        Kernel to register.
    """
    BaseKernelRegistry.register(kernel)


def check_inputs(X: np.ndarray, X2: np.ndarray) -> None:
    """Verify that two input matrices share their feature dimension.

    Parameters
    ----------
    X : np.ndarray
        n x d inputs.
    X2 : np.ndarray
        m x d inputs.

    Raises
    ------
    KernelDimensionError
        If X or X2 is not 2-dimensional or the feature dimensions differ.
    """
    if X.ndim != 2 or X2.ndim != 2:
        error_msg = f"Inputs must be matrices, got shapes {X.shape} and {X2.shape}."
        raise KernelDimensionError(error_msg)
    if X.shape[1] != X2.shape[1]:
        error_msg = (
            f"Input dimensions differ: {X.shape[1]} and {X2.shape[1]} features."
        )
        raise KernelDimensionError(error_msg)


for _kernel in (Linear(), SquaredExp(), GammaExp()):
    register_base_kernel(_kernel)
