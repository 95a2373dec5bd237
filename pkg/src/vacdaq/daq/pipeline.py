"""Sample conversion, threshold clamping and disconnect detection.

The raw device count is always preserved verbatim in the sample, even when
the logged voltage/pressure is replaced by the threshold values, so the log
stays auditable against the wire.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import NamedTuple

from ..emulator import ANALOG_MIDPOINT, count_to_volts
from ..gauge import OUTPUT_MAX_V, OUTPUT_MIN_V, constants_for, pressure_from_signal
from ..vacphys import PressureUnit

DISCONNECT_FLOOR_V = 0.1
DISCONNECT_POLLS = 3


class SampleStatus(str, Enum):
    OK = "ok"
    CLAMPED = "clamped"
    DISCONNECTED = "disconnected"
    NOT_IGNITED = "not_ignited"
    UNDERRANGE = "underrange"
    OVERRANGE = "overrange"
    DISABLED = "disabled"


@dataclass(frozen=True)
class PressureSample:
    timestamp: datetime  # UTC
    channel: int  # 1-based
    raw_count: int
    voltage: float
    pressure: float
    unit: PressureUnit
    status: SampleStatus
    clamped: bool


class ConvertedCount(NamedTuple):
    voltage: float
    pressure: float
    status: SampleStatus


def convert_count(raw: int, unit: PressureUnit = PressureUnit.MBAR,
                  midpoint: int = ANALOG_MIDPOINT) -> ConvertedCount:
    """Count -> voltage -> pressure, flagging signals outside the 0-10 V span.

    Y = 10 (raw / midpoint - 1); Z = 10^(1.667 Y - d) for the unit's gauge
    constant d. Total on 16-bit inputs.
    """
    voltage = count_to_volts(raw, midpoint)
    constants = constants_for(unit)
    if voltage <= OUTPUT_MIN_V:
        status = SampleStatus.UNDERRANGE
    elif voltage >= OUTPUT_MAX_V:
        status = SampleStatus.OVERRANGE
    else:
        status = SampleStatus.OK
    clamped_v = min(max(voltage, OUTPUT_MIN_V), OUTPUT_MAX_V)
    pressure = pressure_from_signal(clamped_v, constants)
    return ConvertedCount(voltage, pressure, status)


def threshold_pressure(threshold_voltage: float, unit: PressureUnit) -> float:
    """Pressure equivalent of a threshold voltage in the channel's unit."""
    return pressure_from_signal(threshold_voltage, constants_for(unit))


def apply_threshold(sample: PressureSample, threshold_voltage: float) -> PressureSample:
    """Clamp a sample at or below the threshold to the threshold values.

    Readings strictly above the threshold pass unchanged; the boundary clamps.
    The raw count is never touched. Idempotent.
    """
    if sample.voltage > threshold_voltage:
        return sample
    return replace(
        sample,
        voltage=threshold_voltage,
        pressure=threshold_pressure(threshold_voltage, sample.unit),
        status=SampleStatus.CLAMPED,
        clamped=True,
    )


class DisconnectDetector:
    """Flags a channel disconnected after N consecutive polls under 0.1 V.

    Detection uses the device voltage recomputed from the raw count, so a
    threshold clamp cannot mask a dead input. Recovery is immediate on the
    first live sample. Disabled channels are skipped.
    """

    def __init__(self, polls: int = DISCONNECT_POLLS,
                 floor_v: float = DISCONNECT_FLOOR_V,
                 midpoint: int = ANALOG_MIDPOINT):
        self.polls = polls
        self.floor_v = floor_v
        self.midpoint = midpoint
        self._low_streak: dict[int, int] = {}

    def update(self, sample: PressureSample) -> PressureSample:
        if sample.status is SampleStatus.DISABLED:
            self._low_streak.pop(sample.channel, None)
            return sample
        device_v = count_to_volts(sample.raw_count, self.midpoint)
        if device_v < self.floor_v:
            streak = self._low_streak.get(sample.channel, 0) + 1
            self._low_streak[sample.channel] = streak
            if streak >= self.polls:
                return replace(sample, status=SampleStatus.DISCONNECTED)
            return sample
        self._low_streak[sample.channel] = 0
        return sample
