"""Per-app network-slice traffic forecasting from MNO, vertical and joint views."""

from .errors import DataError, SlicecastError, TraceFormatError, TrainingDivergedError
from .trace import Trace, TraceMeta, TraceRecord, load_trace, summarize, write_trace

__version__ = "0.1.0"

__all__ = [
    "DataError", "SlicecastError", "Trace", "TraceFormatError", "TraceMeta", "TraceRecord",
    "TrainingDivergedError", "load_trace", "summarize", "write_trace", "__version__",
]
