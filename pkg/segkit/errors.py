from typing import Any


class SegkitError(Exception):
    """Base class for every error raised by the toolkit."""


class InputValidationError(SegkitError, ValueError):
    """
    Invalid user input: annotation files, corpus layouts, configs, record files.

    Keyword context (line numbers, offending values, paths) is kept on ``context``
    so callers and reports can show exactly what was rejected.
    """

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context = context


class AnnotationFormatError(InputValidationError):
    """A `.phn` or `.phones` file does not follow its line grammar."""


class IntervalOrderError(InputValidationError):
    """Phone intervals are unsorted, overlapping or leave gaps."""


class CorpusLayoutError(InputValidationError):
    """Expected corpus directories or files are missing."""


class RecordFormatError(InputValidationError):
    """A manifest, record file, feature cache or checkpoint cannot be decoded."""


class NumericalError(SegkitError, RuntimeError):
    """Non-finite values appeared in activations or losses."""


class TrainingDivergedError(NumericalError):
    """Training hit a non-finite loss; the last good checkpoint was kept."""

    def __init__(self, message: str, *, epoch: int, checkpoint_path: Any = None):
        super().__init__(message)
        self.epoch = epoch
        self.checkpoint_path = checkpoint_path
