"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataFormatError -> 2,
CheckpointError and PercolationError -> 3.
"""


class SparseSpikeError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SparseSpikeError):
    """Invalid run configuration (bad key, bad value, bad combination)."""


class DataFormatError(SparseSpikeError):
    """Malformed dataset or spike-tensor file."""


class CheckpointError(SparseSpikeError):
    """Corrupt or incompatible checkpoint file."""


class PercolationError(SparseSpikeError):
    """The network lost every trainable path through some layer."""
