"""Engine and channel configuration, loadable from YAML."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..emulator import ANALOG_MIDPOINT
from ..errors import ConfigurationError
from ..gauge import OUTPUT_MAX_V, OUTPUT_MIN_V
from ..modbus.codec import MODBUS_PORT
from ..vacphys import PressureUnit

MAX_CHANNELS = 6


@dataclass
class ChannelConfig:
    index: int  # 1..6
    unit: PressureUnit = PressureUnit.MBAR
    threshold_voltage: float = 0.0
    enabled: bool = True
    label: str = ""

    def __post_init__(self):
        if not 1 <= self.index <= MAX_CHANNELS:
            raise ConfigurationError(f"channel index must be in 1..{MAX_CHANNELS}, got {self.index}")
        if not OUTPUT_MIN_V <= self.threshold_voltage <= OUTPUT_MAX_V:
            raise ConfigurationError(
                f"threshold must be within [{OUTPUT_MIN_V}, {OUTPUT_MAX_V}] V, "
                f"got {self.threshold_voltage}"
            )
        if not self.label:
            self.label = f"CH{self.index}"


def _default_channels() -> list[ChannelConfig]:
    return [ChannelConfig(index=i) for i in range(1, MAX_CHANNELS + 1)]


@dataclass
class EngineConfig:
    host: str = "127.0.0.1"
    port: int = MODBUS_PORT
    unit_id: int = 0x01
    poll_interval_ms: int = 1000
    timeout_ms: int = 1000
    start_register: int = 0
    register_count: int = 6
    channels: list[ChannelConfig] = field(default_factory=_default_channels)
    log_path: str = "vacdaq_log.csv"
    serve_host: str = "127.0.0.1"
    serve_port: int = 8080
    static_dir: str | None = None
    midpoint: int = ANALOG_MIDPOINT
    max_failures: int = 5  # consecutive poll failures before 'degraded'

    def __post_init__(self):
        if self.register_count != len(self.channels):
            raise ConfigurationError(
                f"register_count ({self.register_count}) must equal the number of "
                f"configured channels ({len(self.channels)})"
            )
        if not self.poll_interval_ms > 0:
            raise ConfigurationError("poll_interval_ms must be > 0")
        if not self.timeout_ms > 0:
            raise ConfigurationError("timeout_ms must be > 0")
        indexes = [c.index for c in self.channels]
        if len(set(indexes)) != len(indexes):
            raise ConfigurationError("channel indexes must be unique")

    def channel(self, index: int) -> ChannelConfig:
        for c in self.channels:
            if c.index == index:
                return c
        raise ConfigurationError(f"no channel with index {index}")


def _split_address(value: str, what: str, default_port: int) -> tuple[str, int]:
    text = str(value)
    if ":" in text:
        host, _, port = text.rpartition(":")
        try:
            return host, int(port)
        except ValueError:
            raise ConfigurationError(f"{what}: invalid port in {value!r}") from None
    return text, default_port


def load_engine_config(path: str | Path) -> EngineConfig:
    """Load an engine configuration from a YAML file.

    Schema::

        target: 172.16.4.156:502      # device address
        unit_id: 1
        poll_interval_ms: 1000
        timeout_ms: 1000
        start_register: 0
        register_count: 6
        log_path: vacdaq_log.csv
        serve_address: 127.0.0.1:8080 # HMI API
        static_dir: frontend/dist     # optional, serves the console UI
        channels:
          - {index: 1, unit: mbar, threshold_voltage: 2.0, enabled: true, label: CH1}
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: YAML parse error: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")

    kwargs: dict = {}
    if "target" in doc:
        kwargs["host"], kwargs["port"] = _split_address(doc["target"], f"{path}: target",
                                                        MODBUS_PORT)
    if "serve_address" in doc:
        kwargs["serve_host"], kwargs["serve_port"] = _split_address(
            doc["serve_address"], f"{path}: serve_address", 8080)
    for name in ("unit_id", "poll_interval_ms", "timeout_ms", "start_register",
                 "register_count", "midpoint", "max_failures"):
        if name in doc:
            try:
                kwargs[name] = int(doc[name])
            except (TypeError, ValueError):
                raise ConfigurationError(f"{path}: field {name!r} must be an integer") from None
    for name in ("log_path", "static_dir"):
        if name in doc and doc[name] is not None:
            kwargs[name] = str(doc[name])

    if "channels" in doc:
        raw = doc["channels"]
        if not isinstance(raw, list):
            raise ConfigurationError(f"{path}: 'channels' must be a list")
        channels = []
        for i, entry in enumerate(raw):
            if not isinstance(entry, dict) or "index" not in entry:
                raise ConfigurationError(f"{path}: channels[{i}] must be a mapping with 'index'")
            channels.append(ChannelConfig(
                index=int(entry["index"]),
                unit=PressureUnit.parse(str(entry.get("unit", "mbar"))),
                threshold_voltage=float(entry.get("threshold_voltage", 0.0)),
                enabled=bool(entry.get("enabled", True)),
                label=str(entry.get("label", "")),
            ))
        kwargs["channels"] = channels
        kwargs.setdefault("register_count", len(channels))

    return EngineConfig(**kwargs)
