"""Acquisition pipeline: poll, convert, threshold, log, publish."""

from .config import ChannelConfig, EngineConfig, load_engine_config  # noqa: F401
from .pipeline import (  # noqa: F401
    ConvertedCount,
    DisconnectDetector,
    PressureSample,
    SampleStatus,
    apply_threshold,
    convert_count,
    threshold_pressure,
)
from .logfile import CSV_HEADER, SampleLog, format_row  # noqa: F401
from .engine import AcquisitionEngine, poll_once  # noqa: F401
