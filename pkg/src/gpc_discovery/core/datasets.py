"""Binary classification datasets."""

from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from sklearn.preprocessing import StandardScaler

from gpc_discovery.exceptions import DatasetLoadingError, ShapeMismatchError
from gpc_discovery.verbose import Verbose


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix and binary labels.

    Parameters
    ----------
    X : np.ndarray
        n x d real feature matrix, without missing values.
    y : np.ndarray
        Length n labels in {0, 1}.
    feature_names : list[str] | None, optional
        Names of the features., by default None
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] | None = field(default=None)

    def __post_init__(self) -> None:
        """Validate and normalize arrays.

        Raises
        ------
        ShapeMismatchError
            If X and y have inconsistent shapes.
        DatasetLoadingError
            If X has missing values or y is not binary.
        """
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            error_msg = f"X of shape {X.shape} doesn't match y of shape {y.shape}."
            raise ShapeMismatchError(error_msg)
        if not np.all(np.isfinite(X)):
            error_msg = "Features contain missing or infinite values."
            raise DatasetLoadingError(error_msg)
        if not np.all(np.isin(y, (0, 1))):
            error_msg = f"Labels must be 0 or 1, got {np.unique(y).tolist()}."
            raise DatasetLoadingError(error_msg)
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            error_msg = (
                f"{len(self.feature_names)} feature names for {X.shape[1]} features."
            )
            raise ShapeMismatchError(error_msg)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(int))

    @property
    def n(self) -> int:
        """Number of data points."""
        return self.X.shape[0]

    @property
    def d(self) -> int:
        """Number of features."""
        return self.X.shape[1]

    def __len__(self) -> int:
        """Number of data points.

        Returns
        -------
        int
            Number of rows.
        """
        return self.n

    def subset(self, indices: np.ndarray | slice) -> "Dataset":
        """Dataset restricted to some rows.

        Parameters
        ----------
        indices : np.ndarray | slice
            Rows to keep.

        Returns
        -------
        Dataset
            New dataset.
        """
        return Dataset(self.X[indices], self.y[indices], self.feature_names)

    def batches(self, batch_size: int) -> Iterator["Dataset"]:
        """Consecutive batches of batch_size rows, the last one may be smaller.

        Parameters
        ----------
        batch_size : int
            Number of rows per batch.

        Yields
        ------
        Dataset
            Batch.
        """
        for start in range(0, self.n, batch_size):
            yield self.subset(slice(start, start + batch_size))

    def append(self, other: "Dataset") -> "Dataset":
        """Concatenate the rows of another dataset.

        Parameters
        ----------
        other : Dataset
            Rows to append.

        Returns
        -------
        Dataset
            New dataset.
        """
        if other.d != self.d:
            error_msg = f"Can't append {other.d} features to {self.d} features."
            raise ShapeMismatchError(error_msg)
        return Dataset(
            np.vstack([self.X, other.X]),
            np.concatenate([self.y, other.y]),
            self.feature_names,
        )

    @classmethod
    def empty(cls, d: int, feature_names: list[str] | None = None) -> "Dataset":
        """Dataset with no row.

        Parameters
        ----------
        d : int
            Number of features.
        feature_names : list[str] | None, optional
            Names of the features., by default None

        Returns
        -------
        Dataset
            Empty dataset.
        """
        return cls(np.zeros((0, d)), np.zeros(0, dtype=int), feature_names)


class Standardizer:
    """Per-column standardization fitted on training data only.

    Constant columns keep a scale of 1.

    Examples
    --------
    >>> standardizer = Standardizer().fit(train)
    >>> train, test = standardizer.transform(train), standardizer.transform(test)
    """

    def __init__(self) -> None:
        self._scaler = StandardScaler()
        self.mean: np.ndarray | None = None
        self.scale: np.ndarray | None = None

    @property
    def is_fitted(self) -> bool:
        """Whether statistics are available."""
        return self.mean is not None

    def fit(self, dataset: Dataset) -> "Standardizer":
        """Compute the columns' means and standard deviations.

        Parameters
        ----------
        dataset : Dataset
            Training data.

        Returns
        -------
        Standardizer
            self.
        """
        self._scaler.fit(dataset.X)
        self.mean = np.array(self._scaler.mean_, dtype=float)
        self.scale = np.array(self._scaler.scale_, dtype=float)
        constant = np.flatnonzero(self._scaler.var_ == 0)
        if constant.size > 0:
            names = dataset.feature_names
            columns = [names[i] if names else str(i) for i in constant]
            Verbose().display(
                1,
                f"Constant feature columns kept with scale 1: {', '.join(columns)}.",
            )
        return self

    def transform(self, dataset: Dataset) -> Dataset:
        """Standardize a dataset with the stored statistics.

        Parameters
        ----------
        dataset : Dataset
            Data to transform.

        Returns
        -------
        Dataset
            Standardized copy.

        Raises
        ------
        DatasetLoadingError
            If the standardizer has not been fitted.
        ShapeMismatchError
            If the number of features differs from the fitted one.
        """
        if not self.is_fitted:
            error_msg = "Standardizer must be fitted before transforming data."
            raise DatasetLoadingError(error_msg)
        if dataset.d != self.mean.shape[0]:
            error_msg = (
                f"Standardizer fitted on {self.mean.shape[0]} features, "
                f"got {dataset.d}."
            )
            raise ShapeMismatchError(error_msg)
        if dataset.n == 0:
            return dataset
        X = (dataset.X - self.mean) / self.scale
        return Dataset(X, dataset.y, dataset.feature_names)

    def transform_features(self, X: np.ndarray) -> np.ndarray:
        """Standardize a bare feature matrix."""
        if not self.is_fitted:
            error_msg = "Standardizer must be fitted before transforming data."
            raise DatasetLoadingError(error_msg)
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def fit_transform(self, dataset: Dataset) -> Dataset:
        """Fit on a dataset and return it standardized."""
        return self.fit(dataset).transform(dataset)

    def to_dict(self) -> dict[str, Any]:
        """Statistics as a JSON-serializable dictionnary.

        Returns
        -------
        dict[str, Any]
            'mean' and 'scale' lists, None if not fitted.
        """
        if not self.is_fitted:
            return {"mean": None, "scale": None}
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, content: dict[str, Any]) -> "Standardizer":
        """Restore stored statistics.

        Parameters
        ----------
        content : dict[str, Any]
            Output of to_dict.

        Returns
        -------
        Standardizer
            Fitted standardizer, or unfitted one if no statistics were stored.
        """
        standardizer = cls()
        if content.get("mean") is not None:
            standardizer.mean = np.array(content["mean"], dtype=float)
            standardizer.scale = np.array(content["scale"], dtype=float)
        return standardizer
