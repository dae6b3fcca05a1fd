"""Command line interface: fit, stream, predict, grid and gen-toy."""

import json
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
import numpy as np

from gpc_discovery.core.io.readers import load_checkpoint, load_features
from gpc_discovery.core.io.savers import (
    grid_dataframe,
    predictions_dataframe,
    save_dataset,
    write_csv,
)
from gpc_discovery.exceptions import (
    CheckpointLoadingError,
    ConfigurationError,
    DatasetLoadingError,
    ImpossibleSaveError,
    KernelDepthError,
    KernelParsingError,
    ShapeMismatchError,
    SmcAbortedError,
    UnknownBaseKernelError,
)
from gpc_discovery.experiments import ExperimentConfig, run_offline, run_online
from gpc_discovery.parsers import build_experiment_config, read_config_file
from gpc_discovery.prediction.metrics import Accuracy
from gpc_discovery.prediction.predictor import Predictor, probability_grid
from gpc_discovery.toy import TOY_KINDS, ToySpec, gen_toy
from gpc_discovery.verbose import set_verbose_level

EXIT_SUCCESS = 0
EXIT_RUNTIME_FAILURE = 1
EXIT_USAGE_ERROR = 2

USAGE_ERRORS = (
    ConfigurationError,
    KernelDepthError,
    KernelParsingError,
    UnknownBaseKernelError,
)
RUNTIME_ERRORS = (
    CheckpointLoadingError,
    DatasetLoadingError,
    ImpossibleSaveError,
    ShapeMismatchError,
)

_EXPERIMENT_OPTIONS = [
    click.option("--config", "config_file", type=click.Path(dir_okay=False)),
    click.option("--data", type=click.Path(dir_okay=False)),
    click.option("--toy-kind", type=click.Choice(TOY_KINDS)),
    click.option("--toy-n", type=int),
    click.option("--toy-noise", type=float),
    click.option("--toy-seed", type=int),
    click.option("--batch-count", type=int),
    click.option("--batch-size", type=int),
    click.option("--train-fraction", type=float),
    click.option("--split-seed", type=int),
    click.option("--stratify/--no-stratify", default=None),
    click.option("--standardize/--no-standardize", default=None),
    click.option("--fixed-kernel", type=str),
    click.option("--particles", type=int),
    click.option("--reju", type=int),
    click.option("--ess-threshold", type=float),
    click.option("--seed", type=int),
    click.option("--workers", type=int),
    click.option("--step-size", type=float),
    click.option("--leapfrog-steps", type=int),
    click.option("--mass", type=float),
    click.option("--subtree-replace", type=float),
    click.option("--detach-attach", type=float),
    click.option("--p-leaf", type=float),
    click.option("--p-sum", type=float),
    click.option("--p-product", type=float),
    click.option("--max-depth", type=int),
    click.option("--sigmoid", type=click.Choice(["probit", "logistic"])),
    click.option("--noise-shape", type=float),
    click.option("--noise-scale", type=float),
    click.option("--predictive-noise/--no-predictive-noise", default=None),
    click.option("--n-mc", type=int),
    click.option("--output-dir", "--out", "output_dir", type=click.Path()),
    click.option("--save-latents/--no-save-latents", default=None),
]


def experiment_options(command: Callable) -> Callable:
    """Add the flags mirroring ExperimentConfig to a command."""
    for option in reversed(_EXPERIMENT_OPTIONS):
        command = option(command)
    return command


def resolve_config(mode: str, options: dict[str, Any]) -> ExperimentConfig:
    """Merge command line flags and an optional config file.

    Parameters
    ----------
    mode : str
        'offline' or 'online'.
    options : dict[str, Any]
        Flags, None for flags not given. 'config_file' values override flags.

    Returns
    -------
    ExperimentConfig
        Validated configuration.
    """
    values = {k: v for k, v in options.items() if k != "config_file"}
    if options.get("config_file") is not None:
        values.update(read_config_file(options["config_file"]))
    values["mode"] = mode
    return build_experiment_config(values)


def _echo_config(cfg: ExperimentConfig) -> None:
    click.echo(json.dumps(cfg.to_dict(), indent=2))
    click.echo(f"Seed: {cfg.smc.rng_seed}")


def _run(cfg: ExperimentConfig) -> None:
    _echo_config(cfg)
    report = run_offline(cfg) if cfg.mode == "offline" else run_online(cfg)
    click.echo(json.dumps(report["metrics"], indent=2))
    click.echo(f"Report saved in {Path(cfg.output_dir).joinpath('report.json')}")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--verbose", type=int, default=1, show_default=True)
def main(verbose: int) -> None:
    """Gaussian process classification with kernel structure discovery."""
    set_verbose_level(verbose)


@main.command()
@experiment_options
def fit(**options: Any) -> None:
    """Learn offline from batches of a dataset and score a held-out split."""
    _run(resolve_config("offline", options))


@main.command()
@experiment_options
@click.option(
    "--protocol",
    "online_protocol",
    type=click.Choice(["natural_order", "class_biased_first_batch"]),
)
@click.option("--biased-holdout", type=int)
@click.option(
    "--evaluation",
    "online_evaluation",
    type=click.Choice(["fixed_test", "prequential"]),
)
def stream(**options: Any) -> None:
    """Learn online, evaluating accuracy after every batch."""
    _run(resolve_config("online", options))


@main.command()
@click.option("--checkpoint", type=click.Path(dir_okay=False), required=True)
@click.option("--data", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default="predictions.csv")
@click.option("--latents/--no-latents", default=False)
def predict(checkpoint: str, data: str, out: str, latents: bool) -> None:
    """Score a csv file with the particles of a checkpoint."""
    state = load_checkpoint(filepath=checkpoint)
    X, y, _ = load_features(data)
    if state.standardizer.is_fitted:
        X = state.standardizer.transform_features(X)
    predictor = Predictor(
        state.particle_set,
        state.X_train,
        state.model,
        state.smc.rng_seed,
    )
    results = predictor.predict(X, detail=latents)
    write_csv(predictions_dataframe(results, y), out)
    click.echo(f"{len(results)} predictions saved in {out}")
    if y is not None:
        labels = np.array([r.label for r in results])
        click.echo(f"Accuracy: {Accuracy().evaluate(labels, y):.4f}")


@main.command()
@click.option("--checkpoint", type=click.Path(dir_okay=False), required=True)
@click.option("--resolution", type=int, default=50, show_default=True)
@click.option(
    "--bounds",
    type=float,
    nargs=4,
    default=None,
    help="x1_min x1_max x2_min x2_max, in standardized units. "
    "Defaults to the training range padded by 0.5.",
)
@click.option("--out", type=click.Path(dir_okay=False), default="grid.csv")
def grid(
    checkpoint: str,
    resolution: int,
    bounds: tuple[float, float, float, float] | None,
    out: str,
) -> None:
    """Export predictive probabilities over a 2-dimensional lattice."""
    state = load_checkpoint(filepath=checkpoint)
    X_train = state.X_train
    if not bounds:
        low, high = X_train.min(axis=0) - 0.5, X_train.max(axis=0) + 0.5
        box = ((low[0], high[0]), (low[1], high[1]))
    else:
        box = ((bounds[0], bounds[1]), (bounds[2], bounds[3]))
    prob_grid = probability_grid(
        state.particle_set,
        X_train,
        box,
        resolution,
        state.model,
        state.smc.rng_seed,
    )
    write_csv(grid_dataframe(prob_grid), out)
    click.echo(f"{resolution}x{resolution} grid saved in {out}")


@main.command("gen-toy")
@click.option("--kind", type=click.Choice(TOY_KINDS), required=True)
@click.option("--n", type=int, required=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_toy_command(kind: str, n: int, noise: float, seed: int, out: str) -> None:
    """Generate a toy dataset csv."""
    dataset = gen_toy(ToySpec(kind=kind, n=n, noise=noise, seed=seed))
    save_dataset(dataset, out)
    click.echo(f"{dataset.n} points saved in {out}")


def cli(argv: list[str] | None = None) -> int:
    """Run the command line interface.

    Parameters
    ----------
    argv : list[str] | None, optional
        Arguments, sys.argv[1:] if None., by default None

    Returns
    -------
    int
        0 on success, 1 on runtime failure, 2 on usage error.
    """
    try:
        result = main.main(
            args=argv,
            prog_name="gpc-discovery",
            standalone_mode=False,
        )
    except click.UsageError as error:
        error.show()
        return EXIT_USAGE_ERROR
    except USAGE_ERRORS as error:
        click.echo(f"Error: {error}", err=True)
        return EXIT_USAGE_ERROR
    except SmcAbortedError as error:
        click.echo(f"Error: {error}", err=True)
        if error.checkpoint is not None:
            click.echo(f"Checkpoint: {error.checkpoint}", err=True)
        return EXIT_RUNTIME_FAILURE
    except (click.ClickException, *RUNTIME_ERRORS) as error:
        click.echo(f"Error: {error}", err=True)
        return EXIT_RUNTIME_FAILURE
    except click.Abort:
        return EXIT_RUNTIME_FAILURE
    if isinstance(result, int):
        return result
    return EXIT_SUCCESS


def run() -> None:
    """Console entry point."""
    sys.exit(cli())
