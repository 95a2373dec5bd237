"""Acceptance suite: one test per release criterion, at the stated tolerance.

Each test times its own body against the criterion's runtime budget. The
summary hook in conftest prints one PASS/FAIL line per criterion.
"""
import math
import random
import re
import socket
import statistics
import threading
import time

import pytest

from vacdaq.daq.config import ChannelConfig, EngineConfig
from vacdaq.daq.engine import AcquisitionEngine, poll_once
from vacdaq.daq.logfile import format_row
from vacdaq.daq.pipeline import (
    PressureSample,
    SampleStatus,
    apply_threshold,
    convert_count,
)
from vacdaq.emulator import (
    AdamEmulator,
    ChannelScript,
    Constant,
    Disconnected,
    Ramp,
    Scenario,
    volts_to_count,
)
from vacdaq.gauge import GaugeStatus, constants_for, ignition_delay, pressure_from_signal, signal_from_pressure
from vacdaq.modbus.codec import (
    Adu,
    ExceptionCode,
    ForceMultipleCoils,
    ForceMultipleCoilsResponse,
    ForceSingleCoil,
    PresetMultipleRegistersResponse,
    PresetSingleRegister,
    ReadCoils,
    ReadCoilsResponse,
    ReadHoldingRegisters,
    ReadHoldingRegistersResponse,
    ReadInputRegisters,
    build_exception,
    decode_frame,
    decode_request_pdu,
    decode_response_pdu,
    encode_frame,
    encode_pdu,
)
from vacdaq.modbus.net import ClientConfig, ModbusClient
from vacdaq.vacphys import (
    FlowKind,
    PipeSpec,
    PressureUnit,
    convert_pressure,
    mean_free_path,
    pipe_conductance,
)

from conftest import free_port
from test_codec_props import random_adu
from test_daq_pipeline import ROW_PATTERN, TS


def hx(text: str) -> bytes:
    return bytes.fromhex(text.replace(" ", ""))


class Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc_info):
        if exc_info[0] is None:
            elapsed = time.perf_counter() - self.start
            assert elapsed < self.seconds, f"runtime {elapsed:.2f}s over budget {self.seconds}s"


def test_codec_conformance_vectors():
    """Published request/response bytes reproduce bit-exactly (zero tolerance)."""
    with Budget(1.0):
        # Read Coils, full ADUs
        assert encode_frame(Adu.for_pdu(1, 0xFF, ReadCoils(0, 4))) == \
            hx("00 01 00 00 00 06 FF 01 00 00 00 04")
        response = decode_frame(hx("00 01 00 00 00 04 FF 01 01 0A"), "response", 0x01)
        assert response.pdu == ReadCoilsResponse(b"\x0A")
        assert encode_frame(response) == hx("00 01 00 00 00 04 FF 01 01 0A")
        # FC03 PDU pair: registers 15000/5000/200
        assert encode_pdu(ReadHoldingRegisters(5, 3)) == hx("03 00 05 00 03")
        assert decode_response_pdu(hx("03 06 3A 98 13 88 00 C8"), 0x03) == \
            ReadHoldingRegistersResponse((15000, 5000, 200))
        assert encode_pdu(ReadHoldingRegistersResponse((15000, 5000, 200))) == \
            hx("03 06 3A 98 13 88 00 C8")
        # FC05
        assert encode_pdu(decode_request_pdu(hx("05 00 03 FF 00"))) == hx("05 00 03 FF 00")
        # FC06
        assert encode_pdu(PresetSingleRegister(1, 2)) == hx("06 00 01 00 02")
        # FC15 pair with data byte 05
        assert encode_pdu(ForceMultipleCoils(0, (True, False, True, False))) == \
            hx("0F 00 00 00 04 01 05")
        assert encode_pdu(ForceMultipleCoilsResponse(0, 4)) == hx("0F 00 00 00 04")
        # FC16 response
        assert encode_pdu(PresetMultipleRegistersResponse(0, 3)) == hx("10 00 00 00 03")
        # exception
        assert encode_pdu(build_exception(0x03, ExceptionCode.ILLEGAL_DATA_ADDRESS)) == hx("83 02")


def test_codec_round_trip_10k_random_adus():
    """decode(encode(x)) = x for >= 10^4 random ADUs across all 8 function
    codes and exceptions."""
    with Budget(30.0):
        rng = random.Random(20130125)
        for _ in range(10_000):
            adu, direction = random_adu(rng)
            assert decode_frame(encode_frame(adu), direction) == adu


def test_physics_worked_examples():
    """Conductance and mean-free-path worked examples within 2%, plus unit
    table round trips."""
    with Budget(1.0):
        assert pipe_conductance(PipeSpec(2.0, FlowKind.VISCOUS, length_cm=60.0,
                                         mean_pressure_torr=0.1)) == pytest.approx(4.8, rel=0.02)
        assert pipe_conductance(PipeSpec(2.5, FlowKind.MOLECULAR, length_cm=60.0)) == \
            pytest.approx(3.1, rel=0.02)
        assert pipe_conductance(PipeSpec(5.0, FlowKind.MOLECULAR, length_cm=60.0)) == \
            pytest.approx(25.0, rel=0.02)
        for p_pa in (1.0, 1e-3):
            assert mean_free_path(p_pa) == pytest.approx(6.7e-3 / p_pa, rel=0.02)
        for frm in PressureUnit:
            for to in PressureUnit:
                assert convert_pressure(convert_pressure(2.5, frm, to), to, frm) == \
                    pytest.approx(2.5, rel=0.01)


def test_gauge_transfer_function_round_trip():
    """|log10 error| <= 0.01 decades over the full span, 100 log-spaced points,
    all seven unit constant pairs; d within 0.3% of c/0.6."""
    with Budget(1.0):
        units = [PressureUnit.MBAR, PressureUnit.MICROBAR, PressureUnit.TORR,
                 PressureUnit.MTORR, PressureUnit.MICRON, PressureUnit.PASCAL,
                 PressureUnit.KPA]
        assert len(units) == 7
        for unit in units:
            k = constants_for(unit)
            assert abs(k.d - k.c / 0.6) <= 0.003 * k.d
            lo = convert_pressure(5e-9, PressureUnit.MBAR, unit)
            hi = convert_pressure(1e3, PressureUnit.MBAR, unit)
            for i in range(100):
                p = lo * (hi / lo) ** (i / 99)
                p_back = pressure_from_signal(signal_from_pressure(p, k), k)
                assert abs(math.log10(p_back) - math.log10(p)) <= 0.01


class _RecordingProxy:
    """TCP proxy that records client->server bytes for wire inspection."""

    def __init__(self, upstream_port: int):
        self.upstream_port = upstream_port
        self.port = free_port()
        self.client_bytes = bytearray()
        self._listener = socket.socket()
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind(("127.0.0.1", self.port))
        self._listener.listen(1)
        self._threads = []
        self._accept = threading.Thread(target=self._run, daemon=True)
        self._accept.start()

    def _run(self):
        try:
            client, _ = self._listener.accept()
        except OSError:
            return
        upstream = socket.create_connection(("127.0.0.1", self.upstream_port))

        def pump(src, dst, record):
            try:
                while True:
                    data = src.recv(4096)
                    if not data:
                        break
                    if record:
                        self.client_bytes.extend(data)
                    dst.sendall(data)
            except OSError:
                pass
            finally:
                try:
                    dst.shutdown(socket.SHUT_WR)
                except OSError:
                    pass

        for args in ((client, upstream, True), (upstream, client, False)):
            t = threading.Thread(target=pump, args=args, daemon=True)
            t.start()
            self._threads.append(t)

    def close(self):
        self._listener.close()


def test_end_to_end_loopback_pipeline(tmp_path):
    """Emulator ch1 at 1e-6 mbar pre-ignited; the poll command's wire bytes
    after the transaction id match the documented fetch command; recovered
    pressure within 2%; the CSV row has the documented format."""
    with Budget(10.0):
        scenario = Scenario({1: ChannelScript(Constant(1e-6), ignited=True)})
        emulator = AdamEmulator(scenario, tick_period_ms=20)
        modbus_port = free_port()
        emulator.serve("127.0.0.1", modbus_port)
        proxy = _RecordingProxy(modbus_port)
        log_path = tmp_path / "log.csv"
        config = EngineConfig(
            host="127.0.0.1", port=proxy.port, unit_id=0x01,
            poll_interval_ms=100, timeout_ms=1000,
            channels=[ChannelConfig(index=i) for i in range(1, 7)],
            log_path=str(log_path),
        )
        try:
            time.sleep(0.1)  # let the emulator tick
            engine = AcquisitionEngine(config)
            with engine:
                deadline = time.monotonic() + 5.0
                while time.monotonic() < deadline and engine.status().cycles < 3:
                    time.sleep(0.05)
                assert engine.status().cycles >= 3

            # wire bytes: [tid:2][protocol 0000][length 0006][unit 01][fc 04][start 0000][count 0006]
            first_adu = bytes(proxy.client_bytes[:12])
            assert first_adu[2:] == hx("0000 0006 01 04 0000 0006")

            sample = engine.last_sample(1)
            assert sample.raw_count == 43256
            assert sample.pressure == pytest.approx(1e-6, rel=0.02)

            rows = [l for l in log_path.read_text().splitlines()[1:] if not l.startswith("#")]
            ch1_rows = [r for r in rows if r.split(",")[1] == "1"]
            assert ch1_rows
            for row in ch1_rows:
                assert ROW_PATTERN.match(row), row
            fields = ch1_rows[0].split(",")
            assert fields[2] == "43256"
            assert fields[3] == "3.19988"
            assert fields[4] == "1.010e-06"
            assert fields[5] == "mbar"
            assert fields[6] == "ok"
            assert fields[7] == "false"
        finally:
            proxy.close()
            emulator.shutdown()


def test_ignition_behavior_simulated_clock():
    """Stepping 1e-1 -> 1e-6 mbar holds not_ignited for the interpolated delay
    (~11 s of simulated time) before switching to ok."""
    with Budget(5.0):
        assert ignition_delay(1e-6) == pytest.approx(10.5)  # interpolant value
        scenario = Scenario({1: ChannelScript(Ramp(1e-1, 1e-6, duration_s=0.0))})
        emulator = AdamEmulator(scenario)
        dt = 0.5
        elapsed = 0.0
        ignited_at = None
        statuses = []
        while elapsed < 15.0:
            emulator.tick(dt)
            elapsed += dt
            status = emulator.gauge_status(1)
            statuses.append((elapsed, status))
            if status is GaugeStatus.OK:
                ignited_at = elapsed
                break
        assert ignited_at is not None, "never ignited"
        assert ignited_at == pytest.approx(11.0, abs=dt)  # ~11 s of simulated time
        for t, status in statuses[:-1]:
            assert status is GaugeStatus.NOT_IGNITED, f"at {t}s: {status}"
        # once ignited the full-range value is output
        assert emulator.snapshot().input_registers[0] == volts_to_count(3.2)


def test_threshold_clamp_exact(tmp_path):
    """Threshold 2.0 V: a 1.5 V signal logs as 2.0 V clamped; a 3.2 V signal
    logs unchanged."""
    with Budget(5.0):
        # exact rule on a 1.5 V sample
        low = PressureSample(TS, 1, volts_to_count(1.5), 1.5,
                             pressure_from_signal(1.5, constants_for(PressureUnit.MBAR)),
                             PressureUnit.MBAR, SampleStatus.OK, clamped=False)
        clamped = apply_threshold(low, 2.0)
        assert clamped.voltage == 2.0
        assert clamped.clamped is True
        assert clamped.status is SampleStatus.CLAMPED
        row = format_row(clamped)
        assert ",2.00000," in row and row.endswith(",clamped,true")

        # end to end: a 3.2 V channel with threshold 2.0 V logs unclamped
        scenario = Scenario({1: ChannelScript(Constant(1e-6), ignited=True)})
        emulator = AdamEmulator(scenario, tick_period_ms=20)
        port = free_port()
        emulator.serve("127.0.0.1", port)
        log_path = tmp_path / "log.csv"
        config = EngineConfig(
            host="127.0.0.1", port=port, unit_id=1, poll_interval_ms=100,
            timeout_ms=500, log_path=str(log_path),
            channels=[ChannelConfig(index=i, threshold_voltage=2.0) for i in range(1, 7)],
        )
        try:
            time.sleep(0.1)
            with AcquisitionEngine(config) as engine:
                deadline = time.monotonic() + 5.0
                while time.monotonic() < deadline and engine.status().cycles < 2:
                    time.sleep(0.05)
            rows = [l for l in log_path.read_text().splitlines()[1:] if not l.startswith("#")]
            ch1 = [r.split(",") for r in rows if r.split(",")[1] == "1"]
            assert ch1
            for fields in ch1:
                assert fields[3] == "3.19988"  # the device value, not the threshold
                assert fields[7] == "false"
        finally:
            emulator.shutdown()


def test_concurrency_eight_clients():
    """8 concurrent clients x 100 transactions: zero transport errors, zero
    cross-matched transactions."""
    with Budget(30.0):
        scenario = Scenario({1: ChannelScript(Constant(1e-6), ignited=True)})
        emulator = AdamEmulator(scenario, tick_period_ms=20)
        port = free_port()
        emulator.serve("127.0.0.1", port, max_connections=8)
        errors = []

        def worker(worker_id: int):
            try:
                client = ModbusClient(ClientConfig("127.0.0.1", port, unit_id=1,
                                                   timeout_ms=2000))
                with client:
                    for i in range(100):
                        # a per-request echo value proves responses were not
                        # cross-matched between transactions
                        value = (worker_id * 1000 + i) & 0xFFFF
                        address = 4 + (worker_id % 4)
                        response = client.transact(PresetSingleRegister(address, value))
                        if response != type(response)(address, value):
                            raise AssertionError(f"mismatched response {response}")
                        read = client.transact(ReadInputRegisters(0, 6))
                        if len(read.values) != 6:
                            raise AssertionError("bad register read")
            except Exception as exc:  # noqa: BLE001 - collected for the assertion
                errors.append((worker_id, exc))

        threads = [threading.Thread(target=worker, args=(n,)) for n in range(8)]
        try:
            for t in threads:
                t.start()
            for t in threads:
                t.join(timeout=25.0)
            assert errors == [], errors
        finally:
            emulator.shutdown()


def test_latency_proxies(tmp_path):
    """Loopback median transact < 5 ms; one poll-to-log cycle < 200 ms."""
    with Budget(30.0):
        scenario = Scenario({1: ChannelScript(Constant(1e-6), ignited=True)})
        emulator = AdamEmulator(scenario, tick_period_ms=20)
        port = free_port()
        emulator.serve("127.0.0.1", port)
        try:
            client = ModbusClient(ClientConfig("127.0.0.1", port, unit_id=1,
                                               timeout_ms=1000))
            with client:
                client.transact(ReadInputRegisters(0, 6))  # warm-up
                durations = []
                for _ in range(300):
                    t0 = time.perf_counter()
                    client.transact(ReadInputRegisters(0, 6))
                    durations.append(time.perf_counter() - t0)
                assert statistics.median(durations) < 0.005

            log_path = tmp_path / "log.csv"
            config = EngineConfig(
                host="127.0.0.1", port=port, unit_id=1, poll_interval_ms=1000,
                timeout_ms=1000, log_path=str(log_path),
                channels=[ChannelConfig(index=i) for i in range(1, 7)],
            )
            from vacdaq.daq.logfile import SampleLog
            from vacdaq.daq.pipeline import DisconnectDetector
            sample_log = SampleLog(log_path)
            sample_log.open()
            detector = DisconnectDetector()
            cycle_client = ModbusClient(ClientConfig("127.0.0.1", port, unit_id=1,
                                                     timeout_ms=1000))
            with cycle_client:
                t0 = time.perf_counter()
                samples = poll_once(cycle_client, config)
                samples = [detector.update(s) for s in samples]
                sample_log.append(samples)
                cycle = time.perf_counter() - t0
            sample_log.close()
            assert cycle < 0.2, f"poll-to-log cycle took {cycle * 1000:.1f} ms"
        finally:
            emulator.shutdown()


def test_disconnect_detection_and_recovery(tmp_path):
    """3 consecutive 0 V polls flag disconnected; first live sample recovers."""
    with Budget(5.0):
        scenario = Scenario({
            1: ChannelScript(Constant(1e-6), ignited=True),
            3: ChannelScript(Disconnected()),
        })
        emulator = AdamEmulator(scenario, tick_period_ms=20)
        port = free_port()
        emulator.serve("127.0.0.1", port)
        log_path = tmp_path / "log.csv"
        config = EngineConfig(
            host="127.0.0.1", port=port, unit_id=1, poll_interval_ms=50,
            timeout_ms=500, log_path=str(log_path),
            channels=[ChannelConfig(index=i) for i in range(1, 7)],
        )
        try:
            time.sleep(0.1)
            with AcquisitionEngine(config) as engine:
                deadline = time.monotonic() + 3.0
                while time.monotonic() < deadline and engine.status().cycles < 3:
                    time.sleep(0.02)
                sample = engine.last_sample(3)
                assert sample.status is SampleStatus.DISCONNECTED

                # plug the gauge back in: first live sample recovers the channel
                emulator.set_program(3, ChannelScript(Constant(1e-6), ignited=True))
                cycles_now = engine.status().cycles
                deadline = time.monotonic() + 3.0
                while time.monotonic() < deadline and engine.status().cycles < cycles_now + 3:
                    time.sleep(0.02)
                recovered = engine.last_sample(3)
                assert recovered.status is not SampleStatus.DISCONNECTED
                assert recovered.voltage == pytest.approx(3.19988, abs=1e-3)
        finally:
            emulator.shutdown()
