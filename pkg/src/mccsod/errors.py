"""Exception types shared across the package.

The CLI maps these onto exit codes, so library code should raise the most
specific class that applies instead of bare ValueError/RuntimeError.
"""


class MccsodError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MccsodError):
    """Invalid or inconsistent configuration (bad flag combination, bad value)."""


class DimensionError(MccsodError):
    """Tensor shape or size does not match what the operation requires."""


class DataError(MccsodError):
    """Problem with dataset discovery or on-disk content."""


class PairingError(DataError):
    """Image/GT directories do not pair up one-to-one by stem."""


class EmptyDatasetError(DataError):
    """Dataset directory exists but yields no usable samples."""


class CheckpointError(MccsodError):
    """Checkpoint or weight archive is missing, malformed, or mismatched."""


class NumericError(MccsodError):
    """A non-finite value appeared where the math requires finite ones."""
