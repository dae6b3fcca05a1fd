"""Two-dimensional toy classification datasets."""

from dataclasses import dataclass

import numpy as np
from sklearn.datasets import make_blobs, make_circles, make_moons

from gpc_discovery.core.datasets import Dataset
from gpc_discovery.exceptions import ConfigurationError
from gpc_discovery.verbose import with_verbose

TOY_KINDS = ("blobs_linear", "moons", "circles")
BLOBS_CENTER = 1.5
BLOBS_STD = 0.75
CIRCLES_FACTOR = 0.5


@dataclass(frozen=True)
class ToySpec:
    """Recipe of a toy dataset.

    Parameters
    ----------
    kind : str
        'blobs_linear', 'moons' or 'circles'.
    n : int
        Number of points, at least 4.
    noise : float, optional
        Standard deviation of the gaussian noise added to the points.
        , by default 0.0
    seed : int, optional
        Random seed., by default 0
    """

    kind: str
    n: int
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the recipe.

        Raises
        ------
        ConfigurationError
            If the kind is unknown, n < 4 or noise < 0.
        """
        if self.kind not in TOY_KINDS:
            error_msg = (
                f"Unknown toy dataset '{self.kind}', expected one of {TOY_KINDS}."
            )
            raise ConfigurationError(error_msg)
        if self.n < 4:
            error_msg = f"Toy datasets need at least 4 points, got {self.n}."
            raise ConfigurationError(error_msg)
        if self.noise < 0:
            error_msg = f"noise must be non-negative, got {self.noise}."
            raise ConfigurationError(error_msg)

    def to_dict(self) -> dict:
        """Recipe as a dictionnary."""
        return {"kind": self.kind, "n": self.n, "noise": self.noise, "seed": self.seed}


def _blobs_linear(spec: ToySpec) -> tuple[np.ndarray, np.ndarray]:
    X, _ = make_blobs(
        n_samples=spec.n,
        centers=[[-BLOBS_CENTER, -BLOBS_CENTER], [BLOBS_CENTER, BLOBS_CENTER]],
        cluster_std=BLOBS_STD,
        random_state=spec.seed,
    )
    # labels come from the separating line x1 + x2 = 0, before any noise
    y = (X.sum(axis=1) > 0).astype(int)
    if spec.noise > 0:
        rng = np.random.default_rng(spec.seed)
        X = X + spec.noise * rng.standard_normal(X.shape)
    return X, y


@with_verbose(trigger_threshold=1, message="Generating toy dataset.")
def gen_toy(spec: ToySpec) -> Dataset:
    """Generate a two-dimensional toy dataset.

    'blobs_linear' draws two gaussian blobs labeled by the side of the line
    x1 + x2 = 0 they fall on, so it is linearly separable at noise 0. 'moons'
    and 'circles' are the usual interleaved half circles and concentric
    circles, with balanced classes.

    Parameters
    ----------
    spec : ToySpec
        Recipe.

    Returns
    -------
    Dataset
        n points with features 'x1' and 'x2'.

    Examples
    --------
    >>> dataset = gen_toy(ToySpec(kind="moons", n=200, noise=0.1, seed=7))
    >>> dataset.n, dataset.d
    (200, 2)
    """
    if spec.kind == "blobs_linear":
        X, y = _blobs_linear(spec)
    elif spec.kind == "moons":
        X, y = make_moons(n_samples=spec.n, noise=spec.noise, random_state=spec.seed)
    else:
        X, y = make_circles(
            n_samples=spec.n,
            noise=spec.noise,
            factor=CIRCLES_FACTOR,
            random_state=spec.seed,
        )
    return Dataset(X, y, ["x1", "x2"])
