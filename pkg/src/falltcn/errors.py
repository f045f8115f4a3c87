"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: usage errors exit 2 (argparse),
DataError subclasses exit 3, NumericError subclasses exit 4.
"""


class FallTcnError(Exception):
    """Base class for all toolkit errors."""


class DataError(FallTcnError):
    """Bad input data: files, caches, sequences."""


class SkeletonParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SkeletonFormatError(DataError):
    """Structurally valid file with out-of-contract content (e.g. joint count != 25)."""


class SequenceLengthError(DataError):
    """Sequence empty or longer than the fixed frame budget."""


class DegeneratePoseError(DataError):
    """Pose cannot be normalized (zero norm, zero-length spine bone)."""


class UnderdeterminedRotationError(DegeneratePoseError):
    """Shoulder bone collinear with the spine axis; alignment rotation is ambiguous."""


class ShapeError(FallTcnError):
    """Tensor shape incompatible with a layer or model."""


class ConfigError(FallTcnError):
    """Invalid configuration value."""


class NumericError(FallTcnError):
    """Numerical failure (NaN/inf loss, divergence)."""


class CheckpointError(DataError):
    """Checkpoint file malformed or incompatible with the model."""
