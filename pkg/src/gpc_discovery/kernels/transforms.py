"""Bijections between unconstrained reals and constrained kernel parameters."""

from abc import ABC, abstractmethod

import numpy as np
from scipy.special import expit


class BaseTransform(ABC):
    """Base class for parameter transformations.

    A transformation maps an unconstrained value z to a constrained
    parameter x = forward(z).
    """

    name: str

    @abstractmethod
    def forward(self, z: np.ndarray) -> np.ndarray:
        """Map unconstrained values to constrained ones."""

    @abstractmethod
    def inverse(self, x: np.ndarray) -> np.ndarray:
        """Map constrained values back to unconstrained ones."""

    @abstractmethod
    def derivative(self, z: np.ndarray) -> np.ndarray:
        """Derivative dx/dz, evaluated at z."""

    def log_abs_det_jacobian(self, z: np.ndarray) -> np.ndarray:
        """Log of |dx/dz|, evaluated at z.

        Parameters
        ----------
        z : np.ndarray
            Unconstrained values.

        Returns
        -------
        np.ndarray
            Elementwise log-absolute derivative.
        """
        return np.log(np.abs(self.derivative(z)))

    def __repr__(self) -> str:
        """Represent the transform by its name.

        Returns
        -------
        str
            Transform name.
        """
        return self.name


class IdentityTransform(BaseTransform):
    """Identity, for real-valued parameters."""

    name = "identity"

    def forward(self, z: np.ndarray) -> np.ndarray:
        """Return z unchanged."""
        return np.asarray(z, dtype=float)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        """Return x unchanged."""
        return np.asarray(x, dtype=float)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        """Return ones."""
        return np.ones_like(np.asarray(z, dtype=float))

    def log_abs_det_jacobian(self, z: np.ndarray) -> np.ndarray:
        """Return zeros."""
        return np.zeros_like(np.asarray(z, dtype=float))


class ExpTransform(BaseTransform):
    """z -> exp(z), for positive parameters."""

    name = "exp"

    def forward(self, z: np.ndarray) -> np.ndarray:
        """Return exp(z)."""
        return np.exp(z)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        """Return log(x)."""
        return np.log(x)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        """Return exp(z)."""
        return np.exp(z)

    def log_abs_det_jacobian(self, z: np.ndarray) -> np.ndarray:
        """Return z."""
        return np.asarray(z, dtype=float)


class ScaledLogisticTransform(BaseTransform):
    """z -> upper / (1 + exp(z)), for parameters in (0, upper).

    Parameters
    ----------
    upper : float, optional
        Upper bound of the constrained interval., by default 2.0
    """

    name = "scaled_logistic"

    def __init__(self, upper: float = 2.0) -> None:
        self.upper = upper

    def forward(self, z: np.ndarray) -> np.ndarray:
        """Return upper / (1 + exp(z))."""
        return self.upper * expit(-np.asarray(z, dtype=float))

    def inverse(self, x: np.ndarray) -> np.ndarray:
        """Return log((upper - x) / x)."""
        x = np.asarray(x, dtype=float)
        return np.log(self.upper - x) - np.log(x)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        """Return -x (1 - x / upper) with x = forward(z)."""
        s = expit(-np.asarray(z, dtype=float))
        return -self.upper * s * (1 - s)

    def log_abs_det_jacobian(self, z: np.ndarray) -> np.ndarray:
        """Return log(upper) + log(s) + log(1 - s) with s = expit(-z)."""
        z = np.asarray(z, dtype=float)
        # log expit(-z) = -logaddexp(0, z)
        return np.log(self.upper) - np.logaddexp(0, z) - np.logaddexp(0, -z)
