"""Append-only CSV measurement log.

Header: timestamp,channel,raw_count,voltage_V,pressure,unit,status,clamped
Poll failures are recorded as '#'-prefixed comment lines, never as fabricated
samples. Rows are written whole and flushed per cycle so concurrent readers
of the file only ever see complete rows.
"""
from __future__ import annotations

import os
import threading
from datetime import datetime, timezone
from pathlib import Path

from .pipeline import PressureSample

CSV_HEADER = "timestamp,channel,raw_count,voltage_V,pressure,unit,status,clamped"


def format_timestamp(ts: datetime) -> str:
    """UTC ISO-8601 with millisecond precision, Z-suffixed."""
    utc = ts.astimezone(timezone.utc)
    return utc.strftime("%Y-%m-%dT%H:%M:%S.") + f"{utc.microsecond // 1000:03d}Z"


def format_row(sample: PressureSample) -> str:
    """One CSV row: voltage with 5 decimals, pressure with 4 significant digits."""
    return (
        f"{format_timestamp(sample.timestamp)},{sample.channel},{sample.raw_count},"
        f"{sample.voltage:.5f},{sample.pressure:.3e},{sample.unit.value},"
        f"{sample.status.value},{'true' if sample.clamped else 'false'}"
    )


class SampleLog:
    """Appends samples to a CSV file, creating it with a header when absent."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._file = None

    def open(self) -> None:
        with self._lock:
            if self._file is not None:
                return
            new = not self.path.exists() or self.path.stat().st_size == 0
            if self.path.parent and not self.path.parent.exists():
                self.path.parent.mkdir(parents=True, exist_ok=True)
            self._file = open(self.path, "a", encoding="ascii")
            if new:
                self._file.write(CSV_HEADER + "\n")
                self._flush()

    def append(self, samples: list[PressureSample]) -> None:
        """Write one row per sample and flush once for the batch."""
        with self._lock:
            if self._file is None:
                raise RuntimeError("log not open")
            for sample in samples:
                self._file.write(format_row(sample) + "\n")
            self._flush()

    def comment(self, text: str) -> None:
        """Record a '#'-prefixed diagnostic line (e.g. a failed poll)."""
        with self._lock:
            if self._file is None:
                raise RuntimeError("log not open")
            self._file.write(f"# {text}\n")
            self._flush()

    def _flush(self) -> None:
        self._file.flush()
        os.fsync(self._file.fileno())

    def close(self) -> None:
        with self._lock:
            if self._file is not None:
                self._file.flush()
                self._file.close()
                self._file = None
