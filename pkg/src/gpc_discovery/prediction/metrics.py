"""Metrics to evaluate predictions against true labels."""

from abc import ABC, abstractmethod

import numpy as np

from gpc_discovery.core.model import ModelConfig
from gpc_discovery.exceptions import EmptyAccuracyListError, ShapeMismatchError
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.prediction.predictor import Predictor, decision


class BaseMetric(ABC):
    """Base class to implement metrics."""

    metric_name: str

    @abstractmethod
    def _eval(self, predicted: np.ndarray, observed: np.ndarray) -> float:
        """Evaluate predicted labels against observed ones."""

    def evaluate(self, predicted: np.ndarray, observed: np.ndarray) -> float:
        """Evaluate predicted labels against observed ones.

        Parameters
        ----------
        predicted : np.ndarray
            Predicted labels.
        observed : np.ndarray
            True labels.

        Returns
        -------
        float
            Metric value.

        Raises
        ------
        ShapeMismatchError
            If both arrays have different shapes.
        """
        predicted = np.asarray(predicted).reshape(-1)
        observed = np.asarray(observed).reshape(-1)
        if predicted.shape != observed.shape:
            error_msg = (
                f"{predicted.shape[0]} predictions for "
                f"{observed.shape[0]} observed labels."
            )
            raise ShapeMismatchError(error_msg)
        return self._eval(predicted=predicted, observed=observed)

    def evaluate_particles(
        self,
        ps: ParticleSet,
        X_train: np.ndarray,
        X_test: np.ndarray,
        y_test: np.ndarray,
        model: ModelConfig | None = None,
    ) -> float:
        """Evaluate the predictions of a particle set.

        Parameters
        ----------
        ps : ParticleSet
            Particles conditioned on X_train.
        X_train : np.ndarray
            Training inputs.
        X_test : np.ndarray
            Test inputs.
        y_test : np.ndarray
            Test labels.
        model : ModelConfig | None, optional
            Settings., by default None

        Returns
        -------
        float
            Metric value.
        """
        probabilities = Predictor(ps, X_train, model).predict_proba(X_test)
        return self.evaluate(decision(probabilities), y_test)


class Accuracy(BaseMetric):
    """Fraction of correctly predicted labels."""

    metric_name = "accuracy"

    def _eval(self, predicted: np.ndarray, observed: np.ndarray) -> float:
        """Compute the fraction of equal labels.

        Parameters
        ----------
        predicted : np.ndarray
            Predicted labels.
        observed : np.ndarray
            True labels.

        Returns
        -------
        float
            Accuracy in [0, 1], 0 for empty arrays.
        """
        if predicted.size == 0:
            return 0.0
        return float(np.mean(predicted == observed))


def accuracy(
    ps: ParticleSet,
    X_train: np.ndarray,
    X_test: np.ndarray,
    y_test: np.ndarray,
    model: ModelConfig | None = None,
) -> float:
    """Accuracy of a particle set's predictions.

    Parameters
    ----------
    ps : ParticleSet
        Particles conditioned on X_train.
    X_train : np.ndarray
        Training inputs.
    X_test : np.ndarray
        Test inputs.
    y_test : np.ndarray
        Test labels.
    model : ModelConfig | None, optional
        Settings., by default None

    Returns
    -------
    float
        Fraction of test points whose predicted label is right.
    """
    return Accuracy().evaluate_particles(ps, X_train, X_test, y_test, model)


def online_average_accuracy(per_batch_acc: list[float]) -> float:
    """Mean of the accuracies measured after each batch.

    Parameters
    ----------
    per_batch_acc : list[float]
        Accuracies.

    Returns
    -------
    float
        Arithmetic mean.

    Raises
    ------
    EmptyAccuracyListError
        If the list is empty.
    """
    if len(per_batch_acc) == 0:
        error_msg = "Can't average an empty list of accuracies."
        raise EmptyAccuracyListError(error_msg)
    return float(np.mean(per_batch_acc))
