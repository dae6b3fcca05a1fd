"""Read datasets and checkpoints from files."""

import json
from pathlib import Path

import numpy as np
import pandas as pd

from gpc_discovery.core.datasets import Dataset, Standardizer
from gpc_discovery.exceptions import CheckpointLoadingError, DatasetLoadingError
from gpc_discovery.inference.checkpoint import Checkpoint
from gpc_discovery.verbose import with_verbose

LABEL_COLUMN = "label"


def _as_path(filepath: Path | str) -> Path:
    if isinstance(filepath, Path):
        return filepath
    if isinstance(filepath, str):
        return Path(filepath)
    error_msg = f"Can't read files from {filepath}. Accepted types are Path or str."
    raise TypeError(error_msg)


@with_verbose(trigger_threshold=0, message="Loading data from [filepath].")
def load_csv(filepath: Path | str, standardize: bool = True) -> Dataset:
    """Load a labeled dataset from a csv file.

    The file must be a comma-separated UTF-8 file with a header row. The last
    column must be named 'label' and only contain 0 and 1, every other column
    is a numeric feature.

    Parameters
    ----------
    filepath : Path | str
        Path to the file.
    standardize : bool, optional
        Whether to standardize every feature with the file's own statistics.
        To reuse training statistics on test data, load with standardize=False
        and use a fitted Standardizer., by default True

    Returns
    -------
    Dataset
        Loaded dataset.

    Raises
    ------
    DatasetLoadingError
        If the file is missing, a cell is not numeric, the label column is
        missing or a label is not 0 or 1.

    Examples
    --------
    >>> dataset = load_csv("path/to/ionosphere.csv")
    >>> dataset.n, dataset.d
    (351, 34)
    """
    path = _as_path(filepath)
    if not path.is_file():
        error_msg = f"No dataset file at {path}."
        raise DatasetLoadingError(error_msg)
    try:
        raw_df = pd.read_csv(path, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeError) as error:
        error_msg = f"Can't parse {path}: {error}"
        raise DatasetLoadingError(error_msg) from error
    if raw_df.columns.size < 2 or raw_df.columns[-1] != LABEL_COLUMN:
        error_msg = (
            f"The last column of {path} must be '{LABEL_COLUMN}', "
            f"got columns {list(raw_df.columns)}."
        )
        raise DatasetLoadingError(error_msg)
    numeric_df = raw_df.apply(pd.to_numeric, errors="coerce")
    non_numeric = numeric_df.isna() & raw_df.notna()
    if non_numeric.to_numpy().any():
        row, col = np.argwhere(non_numeric.to_numpy())[0]
        error_msg = (
            f"Non-numeric value '{raw_df.iat[row, col]}' in column "
            f"'{raw_df.columns[col]}', row {row + 1} of {path}."
        )
        raise DatasetLoadingError(error_msg)
    if numeric_df.isna().to_numpy().any():
        error_msg = f"Missing values in {path}."
        raise DatasetLoadingError(error_msg)
    labels = numeric_df[LABEL_COLUMN].to_numpy()
    if not np.all(np.isin(labels, (0, 1))):
        invalid = sorted(set(labels[~np.isin(labels, (0, 1))].tolist()))
        error_msg = f"Labels of {path} must be 0 or 1, found {invalid}."
        raise DatasetLoadingError(error_msg)
    features = numeric_df.drop(columns=LABEL_COLUMN)
    dataset = Dataset(
        X=features.to_numpy(dtype=float),
        y=labels.astype(int),
        feature_names=[str(c) for c in features.columns],
    )
    if standardize:
        return Standardizer().fit_transform(dataset)
    return dataset


@with_verbose(trigger_threshold=0, message="Loading checkpoint from [filepath].")
def load_checkpoint(filepath: Path | str) -> Checkpoint:
    """Restore a checkpoint written by save_checkpoint.

    Parameters
    ----------
    filepath : Path | str
        Path to the JSON checkpoint.

    Returns
    -------
    Checkpoint
        Restored state.

    Raises
    ------
    CheckpointLoadingError
        If the file is missing or is not a valid checkpoint.
    """
    path = _as_path(filepath)
    if not path.is_file():
        error_msg = f"No checkpoint file at {path}."
        raise CheckpointLoadingError(error_msg)
    try:
        with path.open(encoding="utf-8") as file:
            content = json.load(file)
    except json.JSONDecodeError as error:
        error_msg = f"{path} is not a valid JSON file: {error}"
        raise CheckpointLoadingError(error_msg) from error
    return Checkpoint.from_dict(content)


def load_features(
    filepath: Path | str,
) -> tuple[np.ndarray, np.ndarray | None, list[str]]:
    """Load points to score, labeled or not.

    Parameters
    ----------
    filepath : Path | str
        Csv file with a header row, a final 'label' column being optional.

    Returns
    -------
    tuple[np.ndarray, np.ndarray | None, list[str]]
        Raw features, labels (None without label column) and feature names.

    Raises
    ------
    DatasetLoadingError
        If the file is missing or a cell is not numeric.
    """
    path = _as_path(filepath)
    if not path.is_file():
        error_msg = f"No dataset file at {path}."
        raise DatasetLoadingError(error_msg)
    header = pd.read_csv(path, nrows=0, encoding="utf-8")
    if header.columns.size > 0 and header.columns[-1] == LABEL_COLUMN:
        dataset = load_csv(filepath=path, standardize=False)
        return dataset.X, dataset.y, dataset.feature_names
    raw_df = pd.read_csv(path, encoding="utf-8")
    numeric_df = raw_df.apply(pd.to_numeric, errors="coerce")
    if numeric_df.isna().to_numpy().any():
        error_msg = f"Missing or non-numeric values in {path}."
        raise DatasetLoadingError(error_msg)
    return numeric_df.to_numpy(dtype=float), None, [str(c) for c in raw_df.columns]
