import time

import pytest

from vacdaq.daq.config import ChannelConfig, EngineConfig
from vacdaq.daq.engine import AcquisitionEngine, poll_once
from vacdaq.daq.pipeline import SampleStatus
from vacdaq.emulator import AdamEmulator, ChannelScript, Constant, Scenario
from vacdaq.errors import ConfigurationError, PollError
from vacdaq.modbus.net import ClientConfig, ModbusClient

from conftest import free_port


@pytest.fixture
def emulator():
    scenario = Scenario({
        1: ChannelScript(Constant(1e-6), ignited=True),
        2: ChannelScript(Constant(1e-3), ignited=True),
    })
    emu = AdamEmulator(scenario, tick_period_ms=20)
    port = free_port()
    emu.serve("127.0.0.1", port)
    time.sleep(0.1)  # a couple of ticks so registers carry live values
    yield emu, port
    emu.shutdown()


def engine_config(port, log_path, **overrides) -> EngineConfig:
    defaults = dict(
        host="127.0.0.1", port=port, unit_id=0x01,
        poll_interval_ms=100, timeout_ms=500,
        channels=[ChannelConfig(index=i, threshold_voltage=0.0) for i in range(1, 7)],
        log_path=str(log_path),
    )
    defaults.update(overrides)
    return EngineConfig(**defaults)


def data_rows(log_path):
    lines = log_path.read_text().splitlines()
    return [l for l in lines[1:] if not l.startswith("#")]


class TestPollOnce:
    def test_full_pipeline_against_emulator(self, emulator, tmp_path):
        _, port = emulator
        config = engine_config(port, tmp_path / "log.csv")
        client = ModbusClient(ClientConfig("127.0.0.1", port, unit_id=1, timeout_ms=500))
        samples = poll_once(client, config)
        client.close()
        assert len(samples) == 6
        ch1 = samples[0]
        assert ch1.raw_count == 43256
        assert ch1.voltage == pytest.approx(3.19988, abs=1e-4)
        assert ch1.pressure == pytest.approx(1e-6, rel=2e-2)
        assert len({s.timestamp for s in samples}) == 1  # shared timestamp

    def test_channels_in_ascending_order(self, emulator, tmp_path):
        _, port = emulator
        config = engine_config(port, tmp_path / "log.csv")
        client = ModbusClient(ClientConfig("127.0.0.1", port, unit_id=1, timeout_ms=500))
        samples = poll_once(client, config)
        client.close()
        assert [s.channel for s in samples] == [1, 2, 3, 4, 5, 6]

    def test_device_exception_becomes_poll_error(self, emulator, tmp_path):
        _, port = emulator
        config = engine_config(port, tmp_path / "log.csv",
                               start_register=3, register_count=6)
        client = ModbusClient(ClientConfig("127.0.0.1", port, unit_id=1, timeout_ms=500))
        with pytest.raises(PollError) as excinfo:
            poll_once(client, config)
        client.close()
        assert excinfo.value.exception_code == 2  # illegal data address

    def test_dead_target_becomes_poll_error(self, tmp_path):
        config = engine_config(free_port(), tmp_path / "log.csv", timeout_ms=200)
        client = ModbusClient(ClientConfig("127.0.0.1", config.port, unit_id=1, timeout_ms=200))
        with pytest.raises(PollError):
            poll_once(client, config)


class TestEngineRun:
    def test_cycle_count_over_interval(self, emulator, tmp_path):
        _, port = emulator
        log_path = tmp_path / "log.csv"
        engine = AcquisitionEngine(engine_config(port, log_path, poll_interval_ms=200))
        with engine:
            time.sleep(2.0)
        cycles = engine.status().cycles
        assert 9 <= cycles <= 11  # 10 +/- 1 over 2 s at 200 ms
        rows = data_rows(log_path)
        assert len(rows) == cycles * 6  # cycles x enabled channels

    def test_set_threshold_mid_run(self, emulator, tmp_path):
        _, port = emulator
        log_path = tmp_path / "log.csv"
        engine = AcquisitionEngine(engine_config(port, log_path))
        with engine:
            time.sleep(0.35)
            engine.set_threshold(1, 9.0)  # ch1 sits at 3.2 V, so it now clamps
            time.sleep(0.35)
        rows = [r for r in data_rows(log_path) if r.split(",")[1] == "1"]
        assert any(r.endswith(",ok,false") for r in rows)
        assert any(",9.00000," in r and r.endswith(",clamped,true") for r in rows)

    def test_stop_start_no_torn_rows(self, emulator, tmp_path):
        _, port = emulator
        log_path = tmp_path / "log.csv"
        engine = AcquisitionEngine(engine_config(port, log_path))
        with engine:
            time.sleep(0.3)
            engine.stop_polling()
            assert engine.status().polling == "stopped"
            cycles_at_stop = engine.status().cycles
            time.sleep(0.4)
            assert engine.status().cycles == cycles_at_stop
            engine.start_polling()
            time.sleep(0.3)
            assert engine.status().cycles > cycles_at_stop
        for row in data_rows(log_path):
            assert len(row.split(",")) == 8

    def test_degraded_after_consecutive_failures(self, tmp_path):
        config = engine_config(free_port(), tmp_path / "log.csv",
                               poll_interval_ms=50, timeout_ms=100, max_failures=3)
        engine = AcquisitionEngine(config)
        with engine:
            deadline = time.monotonic() + 5.0
            while time.monotonic() < deadline and engine.status().polling != "degraded":
                time.sleep(0.05)
            assert engine.status().polling == "degraded"
            assert engine.status().poll_errors >= 3
        comments = [l for l in (tmp_path / "log.csv").read_text().splitlines()
                    if l.startswith("#")]
        assert comments and "poll_error" in comments[0]

    def test_disabled_channel_not_logged(self, emulator, tmp_path):
        _, port = emulator
        log_path = tmp_path / "log.csv"
        channels = [ChannelConfig(index=i, enabled=(i != 3)) for i in range(1, 7)]
        engine = AcquisitionEngine(engine_config(port, log_path, channels=channels))
        with engine:
            time.sleep(0.45)
        rows = data_rows(log_path)
        assert rows
        assert all(r.split(",")[1] != "3" for r in rows)
        sample = engine.last_sample(3)
        assert sample is not None and sample.status is SampleStatus.DISABLED

    def test_set_enabled_writes_device_coil(self, emulator, tmp_path):
        emu, port = emulator
        engine = AcquisitionEngine(engine_config(port, tmp_path / "log.csv"))
        with engine:
            time.sleep(0.25)
            engine.set_enabled(3, False)
            deadline = time.monotonic() + 2.0
            while time.monotonic() < deadline and emu.snapshot().coils[2]:
                time.sleep(0.02)
            assert emu.snapshot().coils[2] is False
            engine.set_enabled(3, True)
            deadline = time.monotonic() + 2.0
            while time.monotonic() < deadline and not emu.snapshot().coils[2]:
                time.sleep(0.02)
            assert emu.snapshot().coils[2] is True

    def test_subscribers_receive_batches(self, emulator, tmp_path):
        _, port = emulator
        engine = AcquisitionEngine(engine_config(port, tmp_path / "log.csv"))
        with engine:
            q = engine.subscribe()
            batch = q.get(timeout=2.0)
            assert batch["seq"] >= 1
            assert len(batch["samples"]) == 6
            second = q.get(timeout=2.0)
            assert second["seq"] == batch["seq"] + 1
            engine.unsubscribe(q)

    def test_poll_to_log_cycle_under_200ms(self, emulator, tmp_path):
        _, port = emulator
        log_path = tmp_path / "log.csv"
        config = engine_config(port, log_path, poll_interval_ms=1000)
        engine = AcquisitionEngine(config)
        client = ModbusClient(ClientConfig("127.0.0.1", port, unit_id=1, timeout_ms=500))
        engine._log.open()
        t0 = time.perf_counter()
        samples = poll_once(client, config)
        samples = [engine._detector.update(s) for s in samples]
        engine._log.append(samples)
        elapsed = time.perf_counter() - t0
        engine._log.close()
        client.close()
        assert elapsed < 0.2, f"poll-to-log took {elapsed * 1000:.1f} ms"

    def test_config_validation(self, tmp_path):
        with pytest.raises(ConfigurationError):
            EngineConfig(register_count=5)  # default 6 channels
