"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2,
ConvergenceError -> 3, NumericError -> 4.
"""


class SchrospecError(Exception):
    """Base class for all package errors."""


class ConfigError(SchrospecError):
    """Invalid configuration, arguments, or input files."""


class CheckpointError(ConfigError):
    """Checkpoint file cannot be loaded."""


class CheckpointFormatError(CheckpointError):
    """Bad magic bytes or truncated/corrupt payload."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint written by an unsupported format version."""


class CheckpointShapeError(CheckpointError):
    """Parameter payload inconsistent with the declared layer dims."""


class NumericError(SchrospecError):
    """A computation produced non-finite values."""


class ConvergenceError(SchrospecError):
    """Training or an iterative solver failed to converge."""


class DomainError(SchrospecError):
    """Computational domain too small for the requested states."""
