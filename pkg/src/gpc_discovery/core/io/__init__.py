"""Input-Output methods.

This module regroup all objects which aim at reading datasets and checkpoints
or saving the outputs of a run.

From this namespace are accessible:

- `RunSaver`        -> Saver writing every output of a run in one directory
- `load_checkpoint` -> Checkpoint reading function
- `load_csv`        -> Labeled dataset reading function
- `load_features`   -> Reading function for points to score
- `save_checkpoint` -> Checkpoint saving function
- `save_dataset`    -> Dataset saving function
- `save_report`     -> Report saving function
"""

from gpc_discovery.core.io.readers import load_checkpoint, load_csv, load_features
from gpc_discovery.core.io.savers import (
    RunSaver,
    save_checkpoint,
    save_dataset,
    save_report,
)

__all__ = [
    "RunSaver",
    "load_checkpoint",
    "load_csv",
    "load_features",
    "save_checkpoint",
    "save_dataset",
    "save_report",
]
