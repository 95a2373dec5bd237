"""HTTP control/monitoring API for the acquisition engine (the HMI backend).

Endpoints:
    GET  /api/status                    engine + per-channel state
    GET  /api/channels                  channel list
    PUT  /api/channels/{n}/threshold    body {"voltage": <float>}
    PUT  /api/channels/{n}/enabled      body {"enabled": <bool>}
    POST /api/control/start             remote ON
    POST /api/control/stop              remote OFF
    GET  /api/log?limit=N               recent logged samples
    GET  /api/stream                    server-sent events, one batch per cycle

The push channel is Server-Sent Events (text/event-stream): each poll cycle
is one `data:` message carrying {"seq", "timestamp", "samples": [...]}; the
event id is the cycle sequence number so clients can detect duplicates after
a reconnect. Static console assets are served from an optional directory.
"""
from __future__ import annotations

import json
import logging
import mimetypes
import queue
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from ..errors import DomainError, StartupError, VacdaqError
from .config import ChannelConfig
from .engine import AcquisitionEngine
from .logfile import format_timestamp
from .pipeline import PressureSample, threshold_pressure

log = logging.getLogger(__name__)

STREAM_KEEPALIVE_S = 5.0

_CHANNEL_ROUTE = re.compile(r"^/api/channels/(\d+)/(threshold|enabled)$")


def sample_to_json(sample: PressureSample) -> dict:
    return {
        "timestamp": format_timestamp(sample.timestamp),
        "channel": sample.channel,
        "raw_count": sample.raw_count,
        "voltage": sample.voltage,
        "pressure": sample.pressure,
        "unit": sample.unit.value,
        "status": sample.status.value,
        "clamped": sample.clamped,
    }


def channel_to_json(engine: AcquisitionEngine, channel: ChannelConfig) -> dict:
    last = engine.last_sample(channel.index)
    return {
        "index": channel.index,
        "label": channel.label,
        "unit": channel.unit.value,
        "enabled": channel.enabled,
        "threshold_voltage": channel.threshold_voltage,
        "threshold_pressure": threshold_pressure(channel.threshold_voltage, channel.unit),
        "last": sample_to_json(last) if last is not None else None,
    }


def status_to_json(engine: AcquisitionEngine) -> dict:
    status = engine.status()
    config = engine.config
    return {
        "polling": status.polling,
        "target": f"{config.host}:{config.port}",
        "unit_id": config.unit_id,
        "poll_interval_ms": config.poll_interval_ms,
        "cycles": status.cycles,
        "poll_errors": status.poll_errors,
        "consecutive_failures": status.consecutive_failures,
        "last_cycle_at": format_timestamp(status.last_cycle_at) if status.last_cycle_at else None,
        "log_path": str(config.log_path),
        "log_error": status.log_error,
        "channels": [channel_to_json(engine, c) for c in config.channels],
    }


class ApiServer:
    """Threaded HTTP server bound to one engine."""

    def __init__(self, engine: AcquisitionEngine, host: str = "127.0.0.1",
                 port: int = 8080, static_dir: str | Path | None = None):
        self.engine = engine
        self.static_root = Path(static_dir).resolve() if static_dir else None
        handler = self._make_handler()
        try:
            self._httpd = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise StartupError(f"cannot bind HTTP API {host}:{port}: {exc}") from exc
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    def start(self) -> "ApiServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        daemon=True, name="daq-api")
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None

    def __enter__(self) -> "ApiServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()

    def _make_handler(self):
        api = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):  # route through logging, not stderr
                log.debug("%s %s", self.address_string(), fmt % args)

            # -- helpers -------------------------------------------------------

            def _send_json(self, payload, status=200):
                body = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(body)

            def _send_error_json(self, status, message):
                self._send_json({"error": message}, status=status)

            def _read_json_body(self):
                length = int(self.headers.get("Content-Length", 0))
                if length <= 0:
                    return {}
                try:
                    return json.loads(self.rfile.read(length))
                except (ValueError, UnicodeDecodeError):
                    raise DomainError("request body is not valid JSON")

            # -- methods --------------------------------------------------------

            def do_OPTIONS(self):
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

            def do_GET(self):
                parsed = urlparse(self.path)
                if parsed.path == "/api/status":
                    return self._send_json(status_to_json(api.engine))
                if parsed.path == "/api/channels":
                    return self._send_json(
                        [channel_to_json(api.engine, c) for c in api.engine.config.channels])
                if parsed.path == "/api/log":
                    params = parse_qs(parsed.query)
                    try:
                        limit = int(params.get("limit", ["100"])[0])
                    except ValueError:
                        return self._send_error_json(400, "limit must be an integer")
                    rows = api.engine.recent(limit)
                    return self._send_json([sample_to_json(s) for s in rows])
                if parsed.path == "/api/stream":
                    return self._stream()
                return self._static(parsed.path)

            def do_PUT(self):
                match = _CHANNEL_ROUTE.match(urlparse(self.path).path)
                if not match:
                    return self._send_error_json(404, "not found")
                index, action = int(match.group(1)), match.group(2)
                try:
                    body = self._read_json_body()
                    if action == "threshold":
                        voltage = body.get("voltage")
                        if not isinstance(voltage, (int, float)) or isinstance(voltage, bool):
                            raise DomainError('body must be {"voltage": <number>}')
                        api.engine.set_threshold(index, float(voltage))
                    else:
                        enabled = body.get("enabled")
                        if not isinstance(enabled, bool):
                            raise DomainError('body must be {"enabled": <bool>}')
                        api.engine.set_enabled(index, enabled)
                except VacdaqError as exc:
                    return self._send_error_json(400, str(exc))
                return self._send_json(channel_to_json(api.engine,
                                                       api.engine.config.channel(index)))

            def do_POST(self):
                path = urlparse(self.path).path
                if path == "/api/control/start":
                    api.engine.start_polling()
                    return self._send_json({"polling": "running"})
                if path == "/api/control/stop":
                    api.engine.stop_polling()
                    return self._send_json({"polling": "stopped"})
                return self._send_error_json(404, "not found")

            # -- server-sent events ----------------------------------------------

            def _stream(self):
                q = api.engine.subscribe()
                try:
                    self.send_response(200)
                    self.send_header("Content-Type", "text/event-stream")
                    self.send_header("Cache-Control", "no-cache")
                    self.send_header("Access-Control-Allow-Origin", "*")
                    self.send_header("Connection", "keep-alive")
                    self.end_headers()
                    while True:
                        try:
                            batch = q.get(timeout=STREAM_KEEPALIVE_S)
                        except queue.Empty:
                            self.wfile.write(b": keepalive\n\n")
                            self.wfile.flush()
                            continue
                        samples = batch["samples"]
                        payload = json.dumps({
                            "seq": batch["seq"],
                            "timestamp": format_timestamp(samples[0].timestamp)
                            if samples else None,
                            "samples": [sample_to_json(s) for s in samples],
                        })
                        self.wfile.write(
                            f"id: {batch['seq']}\ndata: {payload}\n\n".encode())
                        self.wfile.flush()
                except (BrokenPipeError, ConnectionResetError, OSError):
                    pass
                finally:
                    api.engine.unsubscribe(q)

            # -- static assets ------------------------------------------------------

            def _static(self, path):
                if api.static_root is None:
                    return self._send_error_json(404, "not found")
                rel = path.lstrip("/") or "index.html"
                target = (api.static_root / rel).resolve()
                if not str(target).startswith(str(api.static_root)) or not target.is_file():
                    return self._send_error_json(404, "not found")
                content = target.read_bytes()
                ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
                self.send_response(200)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(content)))
                self.end_headers()
                self.wfile.write(content)

        return Handler
