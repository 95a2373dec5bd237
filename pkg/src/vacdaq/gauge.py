"""Combined Pirani / cold-cathode full-range gauge model.

The instrument presents one continuous 0-10 V measuring signal that is
log-linear in pressure, U = c + 0.6 * log10(p), with unit-dependent constants
(c, d) and the inverse p = 10^(1.667 U - d). The cold-cathode stage is only
active below 1e-2 mbar and ignites after a pressure-dependent delay; until
then the Pirani value is output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import ConfigurationError, DomainError, RangeError, StateError
from .vacphys import PressureUnit, convert_pressure

# Regime boundaries, always in mbar regardless of the channel's output unit.
CC_ACTIVATION_MBAR = 1e-2     # cold cathode active only below this
PIRANI_FLOOR_MBAR = 5e-4      # Pirani element saturates below this
SPAN_MIN_MBAR = 5e-9          # full-range measurement span
SPAN_MAX_MBAR = 1000.0
OUTPUT_MIN_V = 0.0
OUTPUT_MAX_V = 10.0

INVERSE_SLOPE = 1.667         # rounded 1/0.6, kept as the instrument states it


class GaugeStatus(str, Enum):
    OK = "ok"
    PIRANI_UNDERRANGE = "pirani_underrange"
    OVERRANGE = "overrange"
    NOT_IGNITED = "not_ignited"
    DISABLED = "disabled"


class IgnitionState(str, Enum):
    PIRANI_ONLY = "pirani_only"
    CC_WAITING = "cc_waiting"
    CC_IGNITED = "cc_ignited"


@dataclass(frozen=True)
class GaugeConstants:
    """Unit-dependent signal constants. d equals c/0.6 up to instrument rounding."""

    unit: PressureUnit
    c: float
    d: float


# Constants kept verbatim from the instrument datasheet rather than recomputing
# d = c/0.6; the residual is what limits round-trip accuracy to ~0.01 decades.
GAUGE_CONSTANTS: dict[PressureUnit, GaugeConstants] = {
    u: GaugeConstants(u, c, d)
    for u, c, d in [
        (PressureUnit.MBAR, 6.8, 11.33),
        (PressureUnit.MICROBAR, 5.0, 8.333),
        (PressureUnit.TORR, 6.875, 11.46),
        (PressureUnit.MTORR, 5.075, 8.458),
        (PressureUnit.MICRON, 5.075, 8.458),
        (PressureUnit.PASCAL, 5.6, 9.333),
        (PressureUnit.KPA, 7.4, 12.33),
    ]
}


def constants_for(unit: PressureUnit) -> GaugeConstants:
    """Return the (c, d) pair for a supported output unit."""
    try:
        return GAUGE_CONSTANTS[unit]
    except KeyError:
        raise ConfigurationError(f"no gauge constants for unit {unit.value!r}") from None


def signal_from_pressure(pressure: float, constants: GaugeConstants) -> float:
    """Measuring signal U = c + 0.6 log10(p), clamped to the 0-10 V span."""
    if not pressure > 0:
        raise DomainError(f"pressure must be > 0, got {pressure!r}")
    u = constants.c + 0.6 * math.log10(pressure)
    return min(max(u, OUTPUT_MIN_V), OUTPUT_MAX_V)


def pressure_from_signal(voltage: float, constants: GaugeConstants) -> float:
    """Inverse transfer function p = 10^(1.667 U - d)."""
    if not OUTPUT_MIN_V <= voltage <= OUTPUT_MAX_V:
        raise RangeError(f"signal must be within [0, 10] V, got {voltage!r}")
    return 10.0 ** (INVERSE_SLOPE * voltage - constants.d)


# Ignition delay anchors (mbar, seconds). Between anchors the delay is
# interpolated linearly against log10(p); outside it clamps to the end values.
_IGNITION_ANCHORS = [
    (math.log10(5e-9), 120.0),
    (math.log10(1e-7), 20.0),
    (math.log10(1e-5), 1.0),
]


def ignition_delay(pressure_mbar: float) -> float:
    """Cold-cathode ignition delay in seconds for a pressure in (0, 1e-2] mbar."""
    if not 0 < pressure_mbar <= CC_ACTIVATION_MBAR:
        raise StateError(
            f"ignition delay undefined outside the cold-cathode region, got {pressure_mbar!r} mbar"
        )
    lp = math.log10(pressure_mbar)
    if lp <= _IGNITION_ANCHORS[0][0]:
        return _IGNITION_ANCHORS[0][1]
    if lp >= _IGNITION_ANCHORS[-1][0]:
        return _IGNITION_ANCHORS[-1][1]
    for (x0, t0), (x1, t1) in zip(_IGNITION_ANCHORS, _IGNITION_ANCHORS[1:]):
        if x0 <= lp <= x1:
            return t0 + (t1 - t0) * (lp - x0) / (x1 - x0)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class GaugeReading:
    voltage: float  # always within [0, 10]
    status: GaugeStatus


PressureProgramFn = Callable[[float], float]
"""Maps elapsed seconds to true pressure in mbar."""


class GaugeChannel:
    """One full-range gauge driven by a true-pressure trajectory.

    Mutated only by its owner's tick; readings are immutable snapshots.
    """

    def __init__(
        self,
        pressure_program: PressureProgramFn,
        constants: GaugeConstants | None = None,
        enabled: bool = True,
    ):
        self.constants = constants if constants is not None else GAUGE_CONSTANTS[PressureUnit.MBAR]
        self.pressure_program = pressure_program
        self.enabled = enabled
        self.ignition_state = IgnitionState.PIRANI_ONLY
        self.ignition_timer = 0.0
        self.clock = 0.0

    def ignite(self) -> None:
        """Force the cold-cathode stage ignited (pre-conditioned channel)."""
        self.ignition_state = IgnitionState.CC_IGNITED
        self.ignition_timer = 0.0

    def _signal(self, pressure_mbar: float) -> float:
        p = convert_pressure(pressure_mbar, PressureUnit.MBAR, self.constants.unit)
        return signal_from_pressure(p, self.constants)

    def step(self, dt: float) -> GaugeReading:
        """Advance the channel by dt seconds and return the emitted reading."""
        if not dt > 0:
            raise DomainError("dt must be > 0")
        if not self.enabled:
            return GaugeReading(0.0, GaugeStatus.DISABLED)

        self.clock += dt
        p = self.pressure_program(self.clock)
        if not p > 0:
            raise DomainError(f"pressure program returned non-positive pressure {p!r}")

        if p > SPAN_MAX_MBAR:
            self.ignition_state = IgnitionState.PIRANI_ONLY
            self.ignition_timer = 0.0
            return GaugeReading(OUTPUT_MAX_V, GaugeStatus.OVERRANGE)

        if p >= CC_ACTIVATION_MBAR:
            # Pirani circuit alone; cold cathode off, no hysteresis.
            self.ignition_state = IgnitionState.PIRANI_ONLY
            self.ignition_timer = 0.0
            return GaugeReading(self._signal(p), GaugeStatus.OK)

        # Cold-cathode region.
        if self.ignition_state is IgnitionState.PIRANI_ONLY:
            self.ignition_state = IgnitionState.CC_WAITING
            self.ignition_timer = 0.0
        if self.ignition_state is IgnitionState.CC_WAITING:
            self.ignition_timer += dt
            if self.ignition_timer > ignition_delay(p):
                self.ignition_state = IgnitionState.CC_IGNITED

        if self.ignition_state is IgnitionState.CC_IGNITED:
            # Below the span floor the reading saturates at the floor value.
            return GaugeReading(self._signal(max(p, SPAN_MIN_MBAR)), GaugeStatus.OK)

        # Not yet ignited: the Pirani value is output, saturated at the
        # element's lower limit when the true pressure is below it.
        return GaugeReading(self._signal(max(p, PIRANI_FLOOR_MBAR)), GaugeStatus.NOT_IGNITED)
