"""Core module of `gpc_discovery`: data, model and numerics.

Please note that this module's main functionalities are accessible
from the main `gpc_discovery` namespace. Input/output tools live in
`gpc_discovery.core.io`, which is imported by the main namespace.

From this namespace are accessible:

- `datasets`    -> labeled datasets and standardization
- `model`       -> particles and the classification model's densities
- `numerics`    -> Cholesky factors, Gaussian conditionals and weights tools
"""

from gpc_discovery.core import datasets, model, numerics

__all__ = [
    "datasets",
    "model",
    "numerics",
]
