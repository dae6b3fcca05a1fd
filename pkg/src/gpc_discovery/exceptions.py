"""Specific exceptions."""

from pathlib import Path


# Kernel Related Errors
class KernelDimensionError(Exception):
    """Exception raised when parameters or inputs do not match a kernel's shape."""


class KernelDepthError(Exception):
    """Exception raised when a kernel expression exceeds the grammar's depth cap."""

    def __init__(self, depth: int, max_depth: int) -> None:
        error_msg = f"Kernel depth {depth} exceeds the grammar maximum of {max_depth}."
        super().__init__(error_msg)


class InvalidTreePathError(Exception):
    """Exception raised when a tree path does not point to a node of the tree."""

    def __init__(self, path: tuple[int, ...], structure: str) -> None:
        error_msg = f"Path {path} does not exist in kernel {structure}."
        super().__init__(error_msg)


class KernelParsingError(Exception):
    """Exception raised when a kernel text form can not be parsed."""


class UnknownBaseKernelError(Exception):
    """Exception raised when using a base kernel tag which is not registered."""

    def __init__(self, tag: str, known: list[str]) -> None:
        error_msg = f"Unknown base kernel '{tag}'. Registered kernels: {known}."
        super().__init__(error_msg)


# Numerics Related Errors
class NonPositiveDefiniteError(Exception):
    """Exception raised when the Cholesky factorization fails after max jitter."""

    def __init__(self, context: str, max_jitter: float) -> None:
        error_msg = (
            f"Matrix ({context}) is not positive definite, "
            f"even with a jitter of {max_jitter:.3e}."
        )
        super().__init__(error_msg)


class NegativeVarianceError(Exception):
    """Exception raised when a conditional variance is significantly negative."""


class ShapeMismatchError(Exception):
    """Exception raised when array shapes are inconsistent."""


class NonFiniteGradientError(Exception):
    """Exception raised when the log-joint gradient is not finite."""


# Inference Related Errors
class ParticleDegeneracyError(Exception):
    """Exception raised when every particle weight collapsed to zero."""


class SmcAbortedError(Exception):
    """Exception raised when a SMC run aborts on a numerical failure."""

    def __init__(self, step: int, cause: Exception, checkpoint: Path | None) -> None:
        self.step = step
        self.cause = cause
        self.checkpoint = checkpoint
        error_msg = f"SMC aborted at step {step}: {cause}."
        if checkpoint is not None:
            error_msg += f" Last valid particle set saved in {checkpoint}."
        super().__init__(error_msg)


class EmptyParticleSetError(Exception):
    """Exception raised when predicting with no particle."""


class EmptyAccuracyListError(Exception):
    """Exception raised when averaging an empty list of accuracies."""


# Loading Related Errors
class DatasetLoadingError(Exception):
    """Exception class to raise when loading a dataset file."""


class CheckpointLoadingError(Exception):
    """Exception raised when a checkpoint file can not be restored."""


# Saving Related Errors
class ImpossibleSaveError(Exception):
    """Exception raised when it is impossible to save a run output."""


# Configuration Related Errors
class ConfigurationError(Exception):
    """Exception raised when a configuration value is invalid."""


class ImpossibleTypeParsingError(Exception):
    """Exception raised when a TOML parser can not access to a variable's type."""

    def __init__(self, keys: list[str], filepath: Path | str) -> None:
        error_msg = f"Type of {'.'.join(keys)} can't be parsed from {filepath}"
        super().__init__(error_msg)


class InvalidParameterKeyError(Exception):
    """Exception raised when accessing a parsed parameter using an incorrect name."""

    def __init__(self, keys: list[str], filepath: Path | str) -> None:
        error_msg = f"Variable {'.'.join(keys)} does not exist in {filepath}"
        super().__init__(error_msg)
