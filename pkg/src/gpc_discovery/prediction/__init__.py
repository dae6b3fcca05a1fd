"""Predictive probabilities and evaluation metrics."""

from gpc_discovery.prediction.metrics import (
    Accuracy,
    BaseMetric,
    accuracy,
    online_average_accuracy,
)
from gpc_discovery.prediction.predictor import (
    FactorCache,
    PredictiveResult,
    Predictor,
    ProbabilityGrid,
    latent_posterior,
    predict_prob,
    probability_grid,
)

__all__ = [
    "Accuracy",
    "BaseMetric",
    "FactorCache",
    "PredictiveResult",
    "Predictor",
    "ProbabilityGrid",
    "accuracy",
    "latent_posterior",
    "online_average_accuracy",
    "predict_prob",
    "probability_grid",
]
