"""Emulated ADAM-5000/TCP chassis with one 8-channel analog-input module.

Each channel is a full-range gauge driven by a scripted pressure program; the
gauge's 0-10 V measuring signal lands in the upper half of the module's
+/-10 V offset-binary count range, exactly as the hardware chain would place
it. The register map is swapped as an immutable snapshot per tick so a
multi-register read never observes a torn state.
"""
from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import yaml

from .errors import ConfigurationError, DomainError
from .gauge import (
    SPAN_MAX_MBAR,
    SPAN_MIN_MBAR,
    GaugeChannel,
    GaugeStatus,
    constants_for,
)
from .modbus import codec
from .modbus.codec import (
    ExceptionCode,
    ForceMultipleCoils,
    ForceMultipleCoilsResponse,
    ForceSingleCoil,
    ForceSingleCoilResponse,
    PresetMultipleRegisters,
    PresetMultipleRegistersResponse,
    PresetSingleRegister,
    PresetSingleRegisterResponse,
    ReadCoils,
    ReadCoilsResponse,
    ReadHoldingRegisters,
    ReadHoldingRegistersResponse,
    ReadInputRegisters,
    ReadInputRegistersResponse,
    ReportSlaveId,
    ReportSlaveIdResponse,
    RequestPdu,
    ResponsePdu,
    build_exception,
    pack_bits,
)
from .modbus.net import ModbusServer, ServerConfig
from .vacphys import PressureUnit, PumpdownParams, pumpdown_pressure

CHANNEL_COUNT = 8
ANALOG_MIDPOINT = 32770  # the module's stated midpoint; 32768 is the canonical half-scale
ANALOG_SPAN_V = 10.0
DEFAULT_TICK_MS = 100  # 10 samples/sec across the module
MIN_TICK_MS = 10

IDENTITY_MODEL = "VACDAQ-EMU,5000TCP,5017"
RUN_INDICATOR_ON = 0xFF


def volts_to_count(volts: float, midpoint: int = ANALOG_MIDPOINT) -> int:
    """Map a voltage in [-10, +10] to an offset-binary count, rounding half
    away from zero and saturating to the 16-bit range."""
    raw = midpoint * (volts / ANALOG_SPAN_V + 1.0)
    count = math.floor(raw + 0.5) if raw >= 0 else math.ceil(raw - 0.5)
    return min(max(count, 0), 0xFFFF)


def count_to_volts(count: int, midpoint: int = ANALOG_MIDPOINT) -> float:
    """Inverse count mapping: Y = 10 * (X / midpoint - 1)."""
    if not 0 <= count <= 0xFFFF:
        raise DomainError(f"count must be a 16-bit value, got {count!r}")
    return ANALOG_SPAN_V * (count / midpoint - 1.0)


# --- pressure programs ---------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    pressure_mbar: float

    def pressure_at(self, t: float) -> float:
        return self.pressure_mbar


@dataclass(frozen=True)
class Ramp:
    """Geometric pressure ramp (linear in log-space) from start to end."""

    start_mbar: float
    end_mbar: float
    duration_s: float

    def pressure_at(self, t: float) -> float:
        if self.duration_s <= 0 or t >= self.duration_s:
            return self.end_mbar
        frac = max(t, 0.0) / self.duration_s
        return self.start_mbar * (self.end_mbar / self.start_mbar) ** frac


@dataclass(frozen=True)
class Pumpdown:
    params: PumpdownParams

    def pressure_at(self, t: float) -> float:
        return pumpdown_pressure(self.params, max(t, 0.0))


@dataclass(frozen=True)
class Disconnected:
    def pressure_at(self, t: float) -> float:
        raise DomainError("disconnected channel has no pressure")


Program = Constant | Ramp | Pumpdown | Disconnected


@dataclass(frozen=True)
class ChannelScript:
    program: Program
    unit: PressureUnit = PressureUnit.MBAR
    ignited: bool = False  # start with the cold-cathode stage pre-ignited


@dataclass(frozen=True)
class Scenario:
    """Per-channel pressure programs; unspecified channels are Disconnected."""

    channels: Mapping[int, ChannelScript] = field(default_factory=dict)

    def __post_init__(self):
        for index, script in self.channels.items():
            if not 1 <= index <= CHANNEL_COUNT:
                raise ConfigurationError(f"channel index {index} outside 1..{CHANNEL_COUNT}")
            _validate_program(index, script.program)

    def script_for(self, index: int) -> ChannelScript:
        return self.channels.get(index, ChannelScript(Disconnected()))


def _validate_program(index: int, program: Program) -> None:
    def check(p: float, what: str) -> None:
        if not SPAN_MIN_MBAR <= p <= SPAN_MAX_MBAR:
            raise ConfigurationError(
                f"channel {index}: {what} {p!r} mbar outside [{SPAN_MIN_MBAR:g}, {SPAN_MAX_MBAR:g}]"
            )

    if isinstance(program, Constant):
        check(program.pressure_mbar, "pressure")
    elif isinstance(program, Ramp):
        check(program.start_mbar, "ramp start")
        check(program.end_mbar, "ramp end")
        if program.duration_s < 0:
            raise ConfigurationError(f"channel {index}: ramp duration must be >= 0")
    elif isinstance(program, Pumpdown):
        check(program.params.initial_pressure, "pump-down p1")
        check(program.params.pump_inlet_pressure, "pump-down p2")


def parse_scenario(doc: object, source: str = "<scenario>") -> Scenario:
    """Build a Scenario from a parsed mapping (see load_scenario for the schema)."""
    if doc is None:
        return Scenario({})
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{source}: top level must be a mapping")
    raw_channels = doc.get("channels", {})
    if not isinstance(raw_channels, dict):
        raise ConfigurationError(f"{source}: 'channels' must be a mapping of index -> program")
    if len(raw_channels) > CHANNEL_COUNT:
        raise ConfigurationError(f"{source}: at most {CHANNEL_COUNT} channels")

    channels: dict[int, ChannelScript] = {}
    for key, spec in raw_channels.items():
        where = f"{source}: channel {key}"
        try:
            index = int(key)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{where}: index must be an integer") from None
        if not isinstance(spec, dict):
            raise ConfigurationError(f"{where}: must be a mapping with a 'program' field")
        try:
            program = _parse_program(spec, where)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{where}: {exc}") from None
        unit = PressureUnit.parse(str(spec.get("unit", "mbar")))
        channels[index] = ChannelScript(program, unit, bool(spec.get("ignited", False)))
    return Scenario(channels)


def _parse_program(spec: dict, where: str) -> Program:
    kind = str(spec.get("program", "")).lower()
    if kind == "constant":
        return Constant(_number(spec, "pressure_mbar", where))
    if kind == "ramp":
        return Ramp(
            _number(spec, "start_mbar", where),
            _number(spec, "end_mbar", where),
            _number(spec, "duration_s", where),
        )
    if kind == "pumpdown":
        return Pumpdown(PumpdownParams(
            initial_pressure=_number(spec, "p1_mbar", where),
            pump_inlet_pressure=_number(spec, "p2_mbar", where),
            conductance_l_per_s=_number(spec, "conductance_l_s", where),
            volume_l=_number(spec, "volume_l", where),
            exponent_factor=float(spec.get("exponent_factor", 1.0)),
        ))
    if kind == "disconnected":
        return Disconnected()
    raise ConfigurationError(
        f"{where}: program must be one of constant/ramp/pumpdown/disconnected, got {kind!r}"
    )


def _number(spec: dict, name: str, where: str) -> float:
    if name not in spec:
        raise ConfigurationError(f"{where}: missing field {name!r}")
    try:
        return float(spec[name])
    except (TypeError, ValueError):
        raise ConfigurationError(f"{where}: field {name!r} must be a number") from None


def load_scenario(path: str | Path) -> Scenario:
    """Load a YAML scenario file.

    Schema::

        channels:
          1: {program: constant, pressure_mbar: 1.0e-6, unit: mbar, ignited: true}
          2: {program: ramp, start_mbar: 0.1, end_mbar: 1.0e-6, duration_s: 2.0}
          3: {program: pumpdown, p1_mbar: 1000, p2_mbar: 0.01,
              conductance_l_s: 4.8, volume_l: 50}
          4: {program: disconnected}

    Channels not listed default to disconnected.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: YAML parse error: {exc}") from exc
    return parse_scenario(doc, source=str(path))


# --- the chassis -----------------------------------------------------------------

@dataclass(frozen=True)
class RegisterSnapshot:
    """One tick's consistent view of the addressable state."""

    input_registers: tuple[int, ...]
    coils: tuple[bool, ...]
    holding_registers: tuple[int, ...]
    identity: bytes


class AdamEmulator:
    """Emulated chassis: gauge channels, register map, Modbus request handler.

    One writer (the tick task) and many concurrent readers: mutations happen
    under a lock and publish a fresh immutable snapshot; request handling for
    reads touches only the snapshot.
    """

    def __init__(
        self,
        scenario: Scenario | None = None,
        midpoint: int = ANALOG_MIDPOINT,
        tick_period_ms: int = DEFAULT_TICK_MS,
        version: str = "0.1.0",
    ):
        if tick_period_ms < MIN_TICK_MS:
            raise ConfigurationError(f"tick period must be >= {MIN_TICK_MS} ms")
        self.scenario = scenario if scenario is not None else Scenario({})
        self.midpoint = midpoint
        self._lock = threading.Lock()
        self._coils = [True] * CHANNEL_COUNT
        self._holding = [0] * CHANNEL_COUNT
        self._holding[0] = tick_period_ms
        self._inputs = [volts_to_count(0.0, midpoint)] * CHANNEL_COUNT
        identity = bytes([RUN_INDICATOR_ON]) + f"{IDENTITY_MODEL},{version}".encode("ascii")
        self._identity = identity
        self._channels: list[GaugeChannel | None] = []
        self._readings: list[GaugeStatus | None] = [None] * CHANNEL_COUNT
        for i in range(CHANNEL_COUNT):
            script = self.scenario.script_for(i + 1)
            if isinstance(script.program, Disconnected):
                self._channels.append(None)
            else:
                channel = GaugeChannel(script.program.pressure_at,
                                       constants_for(script.unit))
                if script.ignited:
                    channel.ignite()
                self._channels.append(channel)
        self._snapshot = self._build_snapshot()
        self._run_thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._server: ModbusServer | None = None

    # -- state ------------------------------------------------------------------

    def _build_snapshot(self) -> RegisterSnapshot:
        return RegisterSnapshot(
            input_registers=tuple(self._inputs),
            coils=tuple(self._coils),
            holding_registers=tuple(self._holding),
            identity=self._identity,
        )

    def snapshot(self) -> RegisterSnapshot:
        return self._snapshot

    @property
    def tick_period_ms(self) -> int:
        return self._snapshot.holding_registers[0]

    def gauge_status(self, index: int) -> GaugeStatus | None:
        """Last gauge status for a 1-based channel (None before the first tick
        or for disconnected channels)."""
        return self._readings[index - 1]

    def set_program(self, index: int, script: ChannelScript) -> None:
        """Reprogram a 1-based channel at runtime (e.g. plug a gauge back in)."""
        if not 1 <= index <= CHANNEL_COUNT:
            raise ConfigurationError(f"channel index {index} outside 1..{CHANNEL_COUNT}")
        _validate_program(index, script.program)
        with self._lock:
            if isinstance(script.program, Disconnected):
                self._channels[index - 1] = None
            else:
                channel = GaugeChannel(script.program.pressure_at, constants_for(script.unit))
                if script.ignited:
                    channel.ignite()
                self._channels[index - 1] = channel

    def tick(self, dt: float) -> RegisterSnapshot:
        """Advance every channel by dt seconds and publish a new snapshot."""
        if not dt > 0:
            raise DomainError("dt must be > 0")
        with self._lock:
            for i, channel in enumerate(self._channels):
                if not self._coils[i]:
                    continue  # disabled coil: register frozen at its last value
                if channel is None:
                    self._inputs[i] = volts_to_count(0.0, self.midpoint)
                    self._readings[i] = None
                    continue
                reading = channel.step(dt)
                self._inputs[i] = volts_to_count(reading.voltage, self.midpoint)
                self._readings[i] = reading.status
            self._snapshot = self._build_snapshot()
            return self._snapshot

    # -- Modbus dispatch -----------------------------------------------------------

    def handle_request(self, request: RequestPdu) -> ResponsePdu:
        """Serve one decoded request against the current register map."""
        snap = self._snapshot

        if isinstance(request, ReadCoils):
            if request.start + request.count > CHANNEL_COUNT:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_ADDRESS)
            bits = snap.coils[request.start:request.start + request.count]
            return ReadCoilsResponse(pack_bits(bits))

        if isinstance(request, ReadInputRegisters):
            if request.start + request.count > CHANNEL_COUNT:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_ADDRESS)
            return ReadInputRegistersResponse(
                snap.input_registers[request.start:request.start + request.count])

        if isinstance(request, ReadHoldingRegisters):
            if request.start + request.count > CHANNEL_COUNT:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_ADDRESS)
            return ReadHoldingRegistersResponse(
                snap.holding_registers[request.start:request.start + request.count])

        if isinstance(request, ForceSingleCoil):
            if request.address >= CHANNEL_COUNT:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_ADDRESS)
            with self._lock:
                self._coils[request.address] = request.on
                self._snapshot = self._build_snapshot()
            return ForceSingleCoilResponse(request.address, request.on)

        if isinstance(request, ForceMultipleCoils):
            if request.start + request.count > CHANNEL_COUNT:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_ADDRESS)
            with self._lock:
                for offset, on in enumerate(request.bits):
                    self._coils[request.start + offset] = on
                self._snapshot = self._build_snapshot()
            return ForceMultipleCoilsResponse(request.start, request.count)

        if isinstance(request, PresetSingleRegister):
            if request.address >= CHANNEL_COUNT:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_ADDRESS)
            if request.address == 0 and not MIN_TICK_MS <= request.value <= 0xFFFF:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_VALUE)
            with self._lock:
                self._holding[request.address] = request.value
                self._snapshot = self._build_snapshot()
            return PresetSingleRegisterResponse(request.address, request.value)

        if isinstance(request, PresetMultipleRegisters):
            if request.start + request.count > CHANNEL_COUNT:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_ADDRESS)
            if request.start == 0 and not MIN_TICK_MS <= request.values[0] <= 0xFFFF:
                return build_exception(request.FUNCTION, ExceptionCode.ILLEGAL_DATA_VALUE)
            with self._lock:
                for offset, value in enumerate(request.values):
                    self._holding[request.start + offset] = value
                self._snapshot = self._build_snapshot()
            return PresetMultipleRegistersResponse(request.start, request.count)

        if isinstance(request, ReportSlaveId):
            return ReportSlaveIdResponse(snap.identity)

        return build_exception(codec.function_code_of(request), ExceptionCode.ILLEGAL_FUNCTION)

    # -- serving ---------------------------------------------------------------------

    def serve(self, host: str = "127.0.0.1", port: int = 1502,
              max_connections: int = 8, real_time: bool = True) -> ModbusServer:
        """Start the Modbus server and, when real_time, the wall-clock tick task."""
        server = ModbusServer(ServerConfig(host, port, self.handle_request,
                                           max_connections=max_connections))
        server.start()
        self._server = server
        if real_time:
            self._stop.clear()
            self._run_thread = threading.Thread(target=self._tick_loop, daemon=True,
                                                name="adam-tick")
            self._run_thread.start()
        return server

    def shutdown(self) -> None:
        self._stop.set()
        if self._run_thread is not None:
            self._run_thread.join(timeout=2.0)
            self._run_thread = None
        if self._server is not None:
            self._server.stop()
            self._server = None

    def _tick_loop(self) -> None:
        last = time.monotonic()
        while not self._stop.is_set():
            period = max(self.tick_period_ms, MIN_TICK_MS) / 1000.0
            self._stop.wait(period)
            now = time.monotonic()
            dt = now - last
            last = now
            if dt > 0 and not self._stop.is_set():
                self.tick(dt)
