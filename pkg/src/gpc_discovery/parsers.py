"""Parsing tools for experiment configuration files."""

import json
import shutil
import tomllib
from collections.abc import Callable, Mapping
from copy import deepcopy
from functools import wraps
from pathlib import Path
from typing import Any, ClassVar

from gpc_discovery.core.model import ModelConfig
from gpc_discovery.exceptions import (
    ConfigurationError,
    ImpossibleTypeParsingError,
    InvalidParameterKeyError,
)
from gpc_discovery.experiments import ExperimentConfig
from gpc_discovery.inference.config import HmcConfig, SmcConfig, StructureMoveConfig
from gpc_discovery.kernels.grammar import PcfgConfig
from gpc_discovery.toy import ToySpec


class TomlParser:
    """Parsing class for toml configuration files.

    Lines starting with '#? ' declare the expected types of the variables:
    '#? KEY: type1 | type2: comment'.

    Parameters
    ----------
    filepath : Path | str
        Path to the config file.
    check_types : bool, optional
        Whether to check types or not., by default True
    """

    _str_to_type: ClassVar[dict[str, type]] = {
        "str": str,
        "int": int,
        "list": list,
        "tuple": tuple,
        "float": float,
        "bool": bool,
        "dict": dict,
    }

    def __init__(self, filepath: Path | str, check_types: bool = True) -> None:
        self.filepath = Path(filepath)
        self._check = check_types
        with self.filepath.open("rb") as f:
            self._elements = tomllib.load(f)
        if check_types:
            self._parsed_types = self._parse_types(filepath=self.filepath)

    def _get(self, keys: list[str]) -> Any:
        """Return a variable from the toml using its path.

        Parameters
        ----------
        keys : list[str]
            List path to the variable: ["VAR1", "VAR2", "VAR3"]
            is the path to the variable VAR1.VAR2.VAR3 in the toml.

        Returns
        -------
        Any
            Variable.

        Raises
        ------
        InvalidParameterKeyError
            If the path doesn't match the file's architecture
        """
        if keys[0] not in self._elements:
            raise InvalidParameterKeyError(keys[:1], self.filepath)
        var = self._elements[keys[0]]
        for i, key in enumerate(keys[1:]):
            if (not isinstance(var, dict)) or (key not in var):
                raise InvalidParameterKeyError(keys[: i + 2], self.filepath)
            var = var[key]
        return deepcopy(var)

    def _get_keys_types(
        self,
        line: str,
    ) -> tuple[list[str], list[type | tuple[type, type]]]:
        """Parse a type hinting line.

        Parameters
        ----------
        line : str
            Line from config file to parse.

        Returns
        -------
        tuple[list[str], list[type | tuple[type, type]]]
            List of keys: path to the variable,
            list of types/tuples: possible type for the variable.
        """
        # Remove comment part on the line
        str_keys, str_types = line.split(": ")[:2]
        str_types = str_types.replace(":", "")
        keys = str_keys.split(".")
        types = []
        for str_type in str_types.split(" | "):
            # Iterable type
            if "[" in str_type:
                splitted_type = str_type[:-1].split("[")
                final_type = tuple(self._str_to_type[x] for x in splitted_type)
            else:
                final_type = self._str_to_type[str_type]
            types.append(final_type)
        return keys, types

    def _parse_types(self, filepath: Path) -> dict:
        """Parse the variables types from the type-hinting rows.

        Parameters
        ----------
        filepath : Path
            Path to the config file.

        Returns
        -------
        dict
            Dictionnary with same structure as config dictionnary referring to types.
        """
        with filepath.open() as file:
            lines = [line.strip() for line in file.readlines()]
        type_hints = [line[3:] for line in lines if line[:3] == "#? "]
        types_dict = {}
        for line in type_hints:
            keys, types = self._get_keys_types(line=line)
            dict_level = types_dict
            for key in keys[:-1]:
                dict_level = dict_level.setdefault(key, {})
            dict_level[keys[-1]] = tuple(types)
        return types_dict

    def _check_type(self, var: Any, var_type: type | tuple[type, type]) -> bool:
        """Check if the type of the variable correspond to the required type.

        Parameters
        ----------
        var : Any
            Variable to check type.
        var_type : type | tuple[type, type]
            Type for the variable, if tuple, means that the first value is an ierable
            and the second one the type of the values in the iterable.

        Returns
        -------
        bool
            True if the variable matches the type, False otherwise.
        """
        if isinstance(var_type, tuple):
            is_correct_iterator = isinstance(var, var_type[0])
            if isinstance(var, dict):
                return is_correct_iterator and all(
                    isinstance(x, var_type[1]) for x in var.values()
                )
            return is_correct_iterator and all(isinstance(x, var_type[1]) for x in var)
        # bool is a subclass of int, booleans must not pass as numbers
        if isinstance(var, bool) and var_type is not bool:
            return False
        return isinstance(var, var_type)

    def _get_type(self, keys: list[str]) -> tuple[type | tuple[type, type], ...]:
        """Return the declared types of a variable.

        Parameters
        ----------
        keys : list[str]
            List path to the variable.

        Returns
        -------
        tuple[type | tuple[type, type], ...]
            Possible types for the variable.

        Raises
        ------
        ImpossibleTypeParsingError
            If the type can't be found in the config file.
        """
        if keys[0] not in self._parsed_types:
            raise ImpossibleTypeParsingError(keys[:1], self.filepath)
        var_type = self._parsed_types[keys[0]]
        for i, key in enumerate(keys[1:]):
            if (not isinstance(var_type, dict)) or (key not in var_type):
                raise ImpossibleTypeParsingError(keys[: i + 2], self.filepath)
            var_type = var_type[key]
        return var_type

    def raise_if_wrong_type(self, keys: list[str]) -> None:
        """Raise a TypeError if the variable type is none of the specified types.

        Parameters
        ----------
        keys : list[str]
            List path to the variable.

        Raises
        ------
        TypeError
            If the variable doesn't match any of the required types.
        """
        var = self._get(keys)
        types = self._get_type(keys)
        if isinstance(types, dict):
            # table whose entries are typed one by one
            for key in var:
                self.raise_if_wrong_type([*keys, key])
            return
        if not any(self._check_type(var, var_type) for var_type in types):
            type_msg = f"Type of {'.'.join(keys)} from {self.filepath} is incorrect."
            names = [
                f"{t[0].__name__}[{t[1].__name__}]"
                if isinstance(t, tuple)
                else t.__name__
                for t in types
            ]
            error_msg = f"{type_msg} Must be of one of these types: {', '.join(names)}."
            raise TypeError(error_msg)

    def raise_if_wrong_type_below(self, keys: list[str]) -> None:
        """Verify types for all variables 'below' keys level.

        Parameters
        ----------
        keys : list[str]
            'Root' level which to start checking types after.
        """
        if not self._check:
            return
        if keys:
            self.raise_if_wrong_type(keys)
            return
        for key in self._elements:
            self.raise_if_wrong_type_below(keys=[key])


def directory_check(get_variable: Callable) -> Callable:
    """Use as decorator to create output directories only when accessed.

    Parameters
    ----------
    get_variable : Callable
        __getitem__ function.

    Returns
    -------
    Callable
        Wrapper function.

    Raises
    ------
    IsADirectoryError
        If the directory exists, is not empty and the behavior is 'raise'.
    """

    @wraps(get_variable)
    def wrapper_func(self: "ConfigParser", key: str) -> Any:
        if key not in self.dirs_vars_keys or self._dir_created[key]:
            return get_variable(self, key)
        directory = Path(get_variable(self, key))
        if directory.is_dir() and any(directory.iterdir()):
            if self.existing_dir_behavior == "raise":
                error_msg = f"Directory {directory} already exists and is not empty."
                raise IsADirectoryError(error_msg)
            if self.existing_dir_behavior == "clean":
                shutil.rmtree(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self._dir_created[key] = True
        return get_variable(self, key)

    return wrapper_func


class ConfigParser(TomlParser):
    """Class to parse toml config scripts.

    Parameters
    ----------
    filepath : Path | str
        Path to the file.
    check_types : bool, optional
        Whether to check types or not., by default True
    dirs_vars_keys : list[str] | None, optional
        Keys to variable defining directories., by default None
    existing_directory: str, optional
        Behavior for directory creation, 'raise' raises an error if the directory
        exists and is not empty, 'merge' will keep the directory as is but might
        replace its content when saving files and 'clean' will erase the directory
        if it exists., by default "merge"
    """

    def __init__(
        self,
        filepath: Path | str,
        check_types: bool = True,
        dirs_vars_keys: list[str] | None = None,
        existing_directory: str = "merge",
    ) -> None:
        super().__init__(filepath, check_types)
        self.dirs_vars_keys = [] if dirs_vars_keys is None else list(dirs_vars_keys)
        if existing_directory not in ("raise", "merge", "clean"):
            error_msg = (
                "existing_directory must be 'raise', 'merge' or 'clean', "
                f"got '{existing_directory}'."
            )
            raise ConfigurationError(error_msg)
        self.existing_dir_behavior = existing_directory
        self._dir_created = {key: False for key in self.dirs_vars_keys}
        self._parsed = False

    def parse(self) -> None:
        """Verify the variables' types, only once."""
        if self._parsed:
            return
        self._parsed = True
        self.raise_if_wrong_type_below([])

    @directory_check
    def __getitem__(self, __k: str) -> Any:
        """Return self._elements[__k].

        Parameters
        ----------
        __k : str
            Key

        Returns
        -------
        Any
            Value associated to __k.
        """
        self.parse()
        return self._elements[__k]

    def to_dict(self) -> dict[str, Any]:
        """Type-checked variables, keys in lower case.

        Returns
        -------
        dict[str, Any]
            Flat configuration, usable by build_experiment_config.
        """
        self.parse()
        return {key.lower(): deepcopy(value) for key, value in self._elements.items()}

    def __repr__(self) -> str:
        """Represent the object as a string.

        Returns
        -------
        str
            self._elements.__repr__()
        """
        return self._elements.__repr__()


def read_config_file(filepath: Path | str) -> dict[str, Any]:
    """Read a flat configuration from a JSON or a toml file.

    Parameters
    ----------
    filepath : Path | str
        '.json' or '.toml' file. Keys are case insensitive.

    Returns
    -------
    dict[str, Any]
        Configuration, keys in lower case.

    Raises
    ------
    ConfigurationError
        If the file is missing, has another extension, is not a mapping or
        a toml value doesn't match its type hint.
    """
    path = Path(filepath)
    if not path.is_file():
        error_msg = f"No configuration file at {path}."
        raise ConfigurationError(error_msg)
    if path.suffix == ".toml":
        try:
            return ConfigParser(path, check_types=True).to_dict()
        except tomllib.TOMLDecodeError as error:
            error_msg = f"{path} is not a valid toml file: {error}"
            raise ConfigurationError(error_msg) from error
        except (TypeError, ImpossibleTypeParsingError) as error:
            raise ConfigurationError(str(error)) from error
    if path.suffix != ".json":
        error_msg = f"Configuration files must be .json or .toml, got {path.name}."
        raise ConfigurationError(error_msg)
    with path.open(encoding="utf-8") as file:
        try:
            content = json.load(file)
        except json.JSONDecodeError as error:
            error_msg = f"{path} is not a valid JSON file: {error}"
            raise ConfigurationError(error_msg) from error
    if not isinstance(content, dict):
        error_msg = f"{path} must contain a JSON object."
        raise ConfigurationError(error_msg)
    return {key.lower(): value for key, value in content.items()}


# flat key -> (section, field name)
FLAT_KEYS: dict[str, tuple[str, str]] = {
    "mode": ("experiment", "mode"),
    "data": ("experiment", "data_path"),
    "batch_count": ("experiment", "batch_count"),
    "batch_size": ("experiment", "batch_size"),
    "train_fraction": ("experiment", "train_fraction"),
    "split_seed": ("experiment", "split_seed"),
    "stratify": ("experiment", "stratify"),
    "standardize": ("experiment", "standardize"),
    "online_protocol": ("experiment", "online_protocol"),
    "biased_holdout": ("experiment", "biased_holdout"),
    "online_evaluation": ("experiment", "online_evaluation"),
    "fixed_kernel": ("experiment", "fixed_kernel"),
    "output_dir": ("experiment", "output_dir"),
    "save_latents": ("experiment", "save_latents"),
    "toy_kind": ("toy", "kind"),
    "toy_n": ("toy", "n"),
    "toy_noise": ("toy", "noise"),
    "toy_seed": ("toy", "seed"),
    "particles": ("smc", "num_particles"),
    "reju": ("smc", "n_reju"),
    "ess_threshold": ("smc", "ess_threshold_frac"),
    "seed": ("smc", "rng_seed"),
    "workers": ("smc", "n_workers"),
    "step_size": ("hmc", "step_size"),
    "leapfrog_steps": ("hmc", "leapfrog_steps"),
    "mass": ("hmc", "mass"),
    "subtree_replace": ("moves", "subtree_replace"),
    "detach_attach": ("moves", "detach_attach"),
    "p_leaf": ("pcfg", "p_leaf"),
    "p_sum": ("pcfg", "p_sum"),
    "p_product": ("pcfg", "p_product"),
    "base_weights": ("pcfg", "base_weights"),
    "max_depth": ("pcfg", "max_depth"),
    "sigmoid": ("model", "sigmoid"),
    "noise_shape": ("model", "noise_shape"),
    "noise_scale": ("model", "noise_scale"),
    "predictive_noise": ("model", "predictive_noise"),
    "n_mc": ("model", "n_mc"),
}

# keys of script configs which are not experiment settings
IGNORED_KEYS = ("verbose",)


def build_experiment_config(values: Mapping[str, Any]) -> ExperimentConfig:
    """Build an experiment configuration from flat settings.

    Keys are the ones of FLAT_KEYS, case insensitive. None values and empty
    strings are treated as unset, so the default value applies. The toy
    settings are only used when 'toy_kind' is set.

    Parameters
    ----------
    values : Mapping[str, Any]
        Flat settings, from command line flags, a toml or a JSON file.

    Returns
    -------
    ExperimentConfig
        Validated configuration.

    Raises
    ------
    ConfigurationError
        If a key is unknown or a value invalid.

    Examples
    --------
    >>> cfg = build_experiment_config(
    ...     {"mode": "offline", "data": "moons.csv", "particles": 8, "seed": 1},
    ... )
    >>> cfg.smc.num_particles
    8
    """
    sections: dict[str, dict[str, Any]] = {
        name: {} for name in ("experiment", "toy", "smc", "hmc", "moves", "pcfg")
    }
    sections["model"] = {}
    for raw_key, value in values.items():
        key = raw_key.lower().replace("-", "_")
        if key in IGNORED_KEYS or value is None or value == "":
            continue
        if key not in FLAT_KEYS:
            error_msg = f"Unknown configuration key '{raw_key}'."
            raise ConfigurationError(error_msg)
        section, name = FLAT_KEYS[key]
        sections[section][name] = value
    try:
        # toy settings without a kind are leftovers of a template config
        toy = ToySpec(**sections["toy"]) if "kind" in sections["toy"] else None
        smc = SmcConfig(
            hmc=HmcConfig(**sections["hmc"]),
            structure_moves=StructureMoveConfig(**sections["moves"]),
            **sections["smc"],
        )
        pcfg = PcfgConfig.from_dict(sections["pcfg"])
        model = ModelConfig(**sections["model"])
        return ExperimentConfig(
            toy=toy,
            smc=smc,
            pcfg=pcfg,
            model=model,
            **sections["experiment"],
        )
    except TypeError as error:
        error_msg = f"Invalid configuration: {error}"
        raise ConfigurationError(error_msg) from error
