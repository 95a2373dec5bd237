"""Acquisition engine: poll the device, convert, clamp, log, publish.

One polling task owns the Modbus client and the log file. Control commands
(thresholds, channel enable, start/stop) cross a queue into that task and are
applied between cycles; live subscribers receive immutable sample batches
through bounded queues and are dropped when they fall behind.
"""
from __future__ import annotations

import logging
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from ..errors import DomainError, PollError, StateError, TransportError, VacdaqError
from ..gauge import OUTPUT_MAX_V, OUTPUT_MIN_V
from ..modbus.codec import (
    ExceptionResponse,
    ForceSingleCoil,
    ForceSingleCoilResponse,
    ReadInputRegisters,
    ReadInputRegistersResponse,
)
from ..modbus.net import ClientConfig, ModbusClient
from .config import EngineConfig
from .logfile import SampleLog, format_timestamp
from .pipeline import (
    DisconnectDetector,
    PressureSample,
    SampleStatus,
    apply_threshold,
    convert_count,
)

log = logging.getLogger(__name__)

SUBSCRIBER_QUEUE_SIZE = 64
RECENT_ROWS = 1000


def poll_once(client: ModbusClient, config: EngineConfig,
              now: Callable[[], datetime] | None = None) -> list[PressureSample]:
    """One acquisition cycle: read the input-register block and convert each
    channel. All samples in the cycle share one timestamp.

    Raises PollError on transport failure or a Modbus exception response.
    """
    request = ReadInputRegisters(config.start_register, config.register_count)
    try:
        response = client.transact(request)
    except TransportError as exc:
        raise PollError(f"poll failed: {exc}") from exc
    if isinstance(response, ExceptionResponse):
        raise PollError(f"device returned exception {response.code.name}",
                        exception_code=int(response.code))
    if not isinstance(response, ReadInputRegistersResponse):
        raise PollError(f"unexpected response {type(response).__name__}")
    if len(response.values) != config.register_count:
        raise PollError(f"expected {config.register_count} registers, got {len(response.values)}")

    timestamp = (now or (lambda: datetime.now(timezone.utc)))()
    samples = []
    for channel in sorted(config.channels, key=lambda c: c.index):
        raw = response.values[channel.index - 1 - config.start_register]
        converted = convert_count(raw, channel.unit, config.midpoint)
        if not channel.enabled:
            sample = PressureSample(timestamp, channel.index, raw, converted.voltage,
                                    converted.pressure, channel.unit,
                                    SampleStatus.DISABLED, clamped=False)
        else:
            sample = PressureSample(timestamp, channel.index, raw, converted.voltage,
                                    converted.pressure, channel.unit,
                                    converted.status, clamped=False)
            sample = apply_threshold(sample, channel.threshold_voltage)
        samples.append(sample)
    return samples


@dataclass
class EngineStatus:
    polling: str  # running | stopped | degraded
    cycles: int
    poll_errors: int
    consecutive_failures: int
    last_cycle_at: datetime | None
    log_error: str | None


class AcquisitionEngine:
    """Owns the poll loop and exposes the control surface used by the HMI API."""

    def __init__(self, config: EngineConfig,
                 client_factory: Callable[[], ModbusClient] | None = None):
        self.config = config
        self._client_factory = client_factory or (lambda: ModbusClient(ClientConfig(
            host=config.host, port=config.port, unit_id=config.unit_id,
            timeout_ms=config.timeout_ms)))
        self._client: ModbusClient | None = None
        self._log = SampleLog(config.log_path)
        self._detector = DisconnectDetector(midpoint=config.midpoint)
        self._commands: queue.Queue[Callable[[], None]] = queue.Queue()
        self._subscribers: list[queue.Queue] = []
        self._subscriber_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._polling = False
        self._cycles = 0
        self._poll_errors = 0
        self._consecutive_failures = 0
        self._last_cycle_at: datetime | None = None
        self._log_error: str | None = None
        self._last_samples: dict[int, PressureSample] = {}
        self._recent: deque[PressureSample] = deque(maxlen=RECENT_ROWS)
        self._seq = 0
        self._thread: threading.Thread | None = None
        self._shutdown = threading.Event()
        self._wake = threading.Event()

    # -- lifecycle ---------------------------------------------------------------

    def start(self) -> "AcquisitionEngine":
        """Open the log and start the poll loop (polling enabled)."""
        if self._thread is not None:
            return self
        self._log.open()
        self._client = self._client_factory()
        self._polling = True
        self._shutdown.clear()
        self._thread = threading.Thread(target=self._run, daemon=True, name="daq-poll")
        self._thread.start()
        return self

    def shutdown(self) -> None:
        """Stop the loop, flush and close the log. Idempotent."""
        self._shutdown.set()
        self._wake.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None
        if self._client is not None:
            self._client.close()
            self._client = None
        self._log.close()

    def __enter__(self) -> "AcquisitionEngine":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.shutdown()

    # -- control surface ------------------------------------------------------------
    #
    # Commands are applied by the polling task between cycles (single-writer
    # model); callers block until their command has run so a GET right after
    # a PUT always observes the new state.

    def start_polling(self) -> None:
        """Remote ON: resume acquisition. No-op when already running."""
        def cmd():
            self._polling = True
        self._enqueue(cmd)

    def stop_polling(self) -> None:
        """Remote OFF: pause acquisition; the loop idles and the log stays open."""
        def cmd():
            self._polling = False
        self._enqueue(cmd)

    def set_threshold(self, index: int, voltage: float) -> None:
        if not OUTPUT_MIN_V <= voltage <= OUTPUT_MAX_V:
            raise DomainError(f"threshold must be within [0, 10] V, got {voltage!r}")
        channel = self.config.channel(index)  # raises for unknown index

        def cmd():
            channel.threshold_voltage = voltage
        self._enqueue(cmd)

    def set_enabled(self, index: int, enabled: bool) -> None:
        """Enable/disable a channel locally and force the device coil to match."""
        channel = self.config.channel(index)

        def cmd():
            channel.enabled = enabled
            try:
                response = self._client.transact(ForceSingleCoil(index - 1, enabled))
                if not isinstance(response, ForceSingleCoilResponse):
                    log.warning("coil write for channel %d answered %r", index, response)
            except TransportError as exc:
                log.warning("coil write for channel %d failed: %s", index, exc)
        self._enqueue(cmd)

    def _enqueue(self, command: Callable[[], None], timeout: float = 5.0) -> None:
        if self._thread is None:
            command()  # no polling task yet; the caller is the only writer
            return
        done = threading.Event()

        def wrapped():
            try:
                command()
            finally:
                done.set()
        self._commands.put(wrapped)
        self._wake.set()  # apply promptly even while stopped
        if not done.wait(timeout):
            raise StateError("control command was not applied in time")

    # -- observation ------------------------------------------------------------------

    def subscribe(self) -> queue.Queue:
        """Register a live subscriber; each poll cycle delivers one batch dict."""
        q: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_QUEUE_SIZE)
        with self._subscriber_lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._subscriber_lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def status(self) -> EngineStatus:
        with self._state_lock:
            polling = "stopped"
            if self._polling:
                polling = ("degraded"
                           if self._consecutive_failures >= self.config.max_failures
                           else "running")
            return EngineStatus(polling, self._cycles, self._poll_errors,
                                self._consecutive_failures, self._last_cycle_at,
                                self._log_error)

    def last_sample(self, index: int) -> PressureSample | None:
        with self._state_lock:
            return self._last_samples.get(index)

    def recent(self, limit: int = 100) -> list[PressureSample]:
        with self._state_lock:
            rows = list(self._recent)
        return rows[-limit:] if limit >= 0 else rows

    # -- the poll loop -----------------------------------------------------------------

    def _run(self) -> None:
        interval = self.config.poll_interval_ms / 1000.0
        next_poll = time.monotonic()
        while not self._shutdown.is_set():
            self._wake.clear()
            self._apply_commands()
            if self._shutdown.is_set():
                break
            if self._polling:
                if time.monotonic() >= next_poll:
                    self._cycle()
                    # keep the cadence; if a cycle overran, skip ahead rather
                    # than bursting to catch up
                    next_poll = max(next_poll + interval, time.monotonic())
                wait = max(next_poll - time.monotonic(), 0.0)
            else:
                next_poll = time.monotonic()
                wait = 0.2
            self._wake.wait(timeout=wait)

    def _apply_commands(self) -> None:
        while True:
            try:
                command = self._commands.get_nowait()
            except queue.Empty:
                return
            try:
                command()
            except VacdaqError as exc:
                log.warning("control command failed: %s", exc)

    def _cycle(self) -> None:
        try:
            samples = poll_once(self._client, self.config)
        except PollError as exc:
            with self._state_lock:
                self._poll_errors += 1
                self._consecutive_failures += 1
            try:
                self._log.comment(f"poll_error {format_timestamp(datetime.now(timezone.utc))} {exc}")
            except OSError as io_exc:
                self._set_log_error(io_exc)
            log.warning("poll cycle failed: %s", exc)
            return

        samples = [self._detector.update(s) for s in samples]
        loggable = [s for s in samples if s.status is not SampleStatus.DISABLED]
        try:
            self._log.append(loggable)
            self._set_log_error(None)
        except OSError as exc:
            self._set_log_error(exc)

        with self._state_lock:
            self._cycles += 1
            self._consecutive_failures = 0
            self._last_cycle_at = samples[0].timestamp if samples else datetime.now(timezone.utc)
            for s in samples:
                self._last_samples[s.channel] = s
            self._recent.extend(loggable)
            self._seq += 1
            seq = self._seq
        self._publish(seq, samples)

    def _set_log_error(self, exc: OSError | None) -> None:
        with self._state_lock:
            self._log_error = None if exc is None else str(exc)
        if exc is not None:
            log.error("log write failed: %s", exc)

    def _publish(self, seq: int, samples: list[PressureSample]) -> None:
        batch = {"seq": seq, "samples": samples}
        dropped = []
        with self._subscriber_lock:
            for q in self._subscribers:
                try:
                    q.put_nowait(batch)
                except queue.Full:
                    dropped.append(q)
            for q in dropped:
                self._subscribers.remove(q)
                log.warning("dropped a slow live subscriber")
