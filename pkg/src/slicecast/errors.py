"""Exception hierarchy shared by the pipeline stages and the CLI."""


class SlicecastError(Exception):
    """Base class for all errors raised by slicecast."""


class DataError(SlicecastError, ValueError):
    """Input data is malformed or inconsistent with what an operation needs."""


class TraceFormatError(DataError):
    """A trace CSV row could not be parsed or violates a record invariant."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrainingDivergedError(SlicecastError):
    """LSTM training produced a non-finite loss."""
