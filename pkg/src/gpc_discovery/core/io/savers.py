"""Save run outputs to files."""

import json
import os
import tempfile
from collections.abc import Callable
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd

from gpc_discovery.core.io.readers import LABEL_COLUMN
from gpc_discovery.exceptions import ImpossibleSaveError
from gpc_discovery.verbose import with_verbose

if TYPE_CHECKING:
    from gpc_discovery.core.datasets import Dataset
    from gpc_discovery.inference.checkpoint import Checkpoint
    from gpc_discovery.prediction.predictor import PredictiveResult, ProbabilityGrid


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    error_msg = f"Object of type {type(value).__name__} is not JSON serializable."
    raise TypeError(error_msg)


def atomic_write(filepath: Path, write: Callable[[Path], None]) -> Path:
    """Write a file through a temporary file renamed on success.

    Parameters
    ----------
    filepath : Path
        Final path.
    write : Callable[[Path], None]
        Function writing the content to the path it's given.

    Returns
    -------
    Path
        filepath.
    """
    filepath.parent.mkdir(parents=True, exist_ok=True)
    descriptor, tmp_name = tempfile.mkstemp(
        dir=filepath.parent,
        prefix=f".{filepath.name}.",
        suffix=".tmp",
    )
    os.close(descriptor)
    tmp_path = Path(tmp_name)
    try:
        write(tmp_path)
        tmp_path.replace(filepath)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()
    return filepath


def write_json(content: dict[str, Any], filepath: Path | str) -> Path:
    """Atomically dump a dictionnary to a JSON file.

    Parameters
    ----------
    content : dict[str, Any]
        Content, numpy values are converted.
    filepath : Path | str
        Destination.

    Returns
    -------
    Path
        Destination.
    """

    def write(path: Path) -> None:
        with path.open("w", encoding="utf-8") as file:
            json.dump(content, file, indent=2, default=_json_default)

    return atomic_write(Path(filepath), write)


def write_csv(df: pd.DataFrame, filepath: Path | str) -> Path:
    """Atomically save a dataframe to a csv file, without index.

    Parameters
    ----------
    df : pd.DataFrame
        Data to save.
    filepath : Path | str
        Destination.

    Returns
    -------
    Path
        Destination.
    """
    return atomic_write(
        Path(filepath),
        lambda path: df.to_csv(path, index=False, encoding="utf-8"),
    )


def save_dataset(dataset: "Dataset", filepath: Path | str) -> Path:
    """Save a dataset as a csv readable by load_csv.

    Parameters
    ----------
    dataset : Dataset
        Dataset to save.
    filepath : Path | str
        Destination.

    Returns
    -------
    Path
        Destination.
    """
    names = dataset.feature_names or [f"x{i + 1}" for i in range(dataset.d)]
    df = pd.DataFrame(dataset.X, columns=names)
    df[LABEL_COLUMN] = dataset.y
    return write_csv(df, filepath)


def predictions_dataframe(
    results: list["PredictiveResult"],
    y_true: np.ndarray | None = None,
) -> pd.DataFrame:
    """Tabulate predictions, one row per test point.

    Parameters
    ----------
    results : list[PredictiveResult]
        Predictions.
    y_true : np.ndarray | None, optional
        True labels, added as a 'true_label' column., by default None

    Returns
    -------
    pd.DataFrame
        Columns prob_class1 and label, then latent_mean_i and latent_var_i for
        every particle i when results carry latents.
    """
    df = pd.DataFrame(
        {
            "prob_class1": [r.prob_class1 for r in results],
            "label": [r.label for r in results],
        },
    )
    if y_true is not None:
        df["true_label"] = np.asarray(y_true, dtype=int)
    if results and results[0].latent is not None:
        for i in range(len(results[0].latent)):
            df[f"latent_mean_{i}"] = [r.latent[i].mean for r in results]
            df[f"latent_var_{i}"] = [r.latent[i].variance for r in results]
    return df


def grid_dataframe(grid: "ProbabilityGrid") -> pd.DataFrame:
    """Tabulate a probability grid with columns x1, x2 and prob.

    Parameters
    ----------
    grid : ProbabilityGrid
        Grid to tabulate.

    Returns
    -------
    pd.DataFrame
        One row per lattice point, x2 varying fastest.
    """
    points = grid.points()
    return pd.DataFrame(
        {"x1": points[:, 0], "x2": points[:, 1], "prob": grid.prob.ravel()},
    )


class RunSaver:
    """Saver for the outputs of a run, all written in one directory.

    Parameters
    ----------
    output_dir : Path | str
        Directory in which to save the files, created if missing.

    Raises
    ------
    ImpossibleSaveError
        If output_dir exists and is not a directory.
    """

    report_filename: str = "report.json"
    checkpoint_filename: str = "checkpoint.json"
    predictions_filename: str = "predictions.csv"
    grid_filename: str = "grid.csv"

    def __init__(self, output_dir: Path | str) -> None:
        self.output_dir = Path(output_dir)
        if self.output_dir.exists() and not self.output_dir.is_dir():
            error_msg = f"{self.output_dir} exists and is not a directory."
            raise ImpossibleSaveError(error_msg)

    def _filepath(self, filename: str) -> Path:
        return self.output_dir.joinpath(filename)

    @with_verbose(trigger_threshold=1, message="Saving report.")
    def save_report(self, report: dict[str, Any]) -> Path:
        """Save the run report.

        Parameters
        ----------
        report : dict[str, Any]
            Report content.

        Returns
        -------
        Path
            Report path.
        """
        return write_json(report, self._filepath(self.report_filename))

    @with_verbose(trigger_threshold=1, message="Saving checkpoint.")
    def save_checkpoint(self, checkpoint: "Checkpoint") -> Path:
        """Save a resumable state.

        Parameters
        ----------
        checkpoint : Checkpoint
            State to save.

        Returns
        -------
        Path
            Checkpoint path.
        """
        return write_json(
            checkpoint.to_dict(),
            self._filepath(self.checkpoint_filename),
        )

    @with_verbose(trigger_threshold=1, message="Saving predictions.")
    def save_predictions(
        self,
        results: list["PredictiveResult"],
        y_true: np.ndarray | None = None,
        filename: str | None = None,
    ) -> Path:
        """Save predictions as csv.

        Parameters
        ----------
        results : list[PredictiveResult]
            Predictions, one per test point.
        y_true : np.ndarray | None, optional
            True labels., by default None
        filename : str | None, optional
            File name, predictions_filename if None., by default None

        Returns
        -------
        Path
            Csv path.
        """
        name = self.predictions_filename if filename is None else filename
        return write_csv(predictions_dataframe(results, y_true), self._filepath(name))

    @with_verbose(trigger_threshold=1, message="Saving probability grid.")
    def save_grid(self, grid: "ProbabilityGrid") -> Path:
        """Save a probability grid as csv.

        Parameters
        ----------
        grid : ProbabilityGrid
            Grid to save.

        Returns
        -------
        Path
            Csv path.
        """
        return write_csv(grid_dataframe(grid), self._filepath(self.grid_filename))


def save_checkpoint(checkpoint: "Checkpoint", filepath: Path | str) -> Path:
    """Save a resumable state to a JSON file.

    Parameters
    ----------
    checkpoint : Checkpoint
        State to save.
    filepath : Path | str
        Destination.

    Returns
    -------
    Path
        Destination.
    """
    return write_json(checkpoint.to_dict(), filepath)


def save_report(report: dict[str, Any], filepath: Path | str) -> Path:
    """Save a run report to a JSON file.

    Parameters
    ----------
    report : dict[str, Any]
        Report content.
    filepath : Path | str
        Destination.

    Returns
    -------
    Path
        Destination.
    """
    return write_json(report, filepath)
