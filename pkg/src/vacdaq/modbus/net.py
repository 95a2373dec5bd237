"""TCP transport for Modbus: pipelining client and concurrent server.

Frame reassembly never trusts packet boundaries: exactly 6 header bytes are
read first, then exactly `length` more, so an ADU split across TCP segments
(or two ADUs sharing one segment) is handled correctly.
"""
from __future__ import annotations

import logging
import socket
import struct
import threading
import time
from dataclasses import dataclass
from typing import Callable

from ..errors import (
    DecodeError,
    DomainError,
    FramingError,
    InvalidFieldError,
    ProtocolError,
    RequestTimeout,
    StartupError,
    TransportError,
    UnsupportedFunctionError,
)
from . import codec
from .codec import (
    Adu,
    ExceptionCode,
    MODBUS_PORT,
    RequestPdu,
    ResponsePdu,
    build_exception,
    decode_request_pdu,
    decode_response_pdu,
    encode_frame,
)

log = logging.getLogger(__name__)

_HDR = struct.Struct(">HHH")  # transaction id, protocol id, length


def _recv_exact(sock: socket.socket, size: int) -> bytes:
    buf = bytearray()
    while len(buf) < size:
        try:
            chunk = sock.recv(size - len(buf))
        except socket.timeout:
            raise
        except OSError as exc:
            raise TransportError(f"socket error: {exc}") from exc
        if not chunk:
            raise TransportError("connection closed by peer")
        buf.extend(chunk)
    return bytes(buf)


def _read_raw_adu(sock: socket.socket) -> tuple[int, int, int, bytes]:
    """Read one ADU; returns (transaction_id, unit_id, protocol_id, pdu_bytes)."""
    header = _recv_exact(sock, 6)
    transaction_id, protocol_id, length = _HDR.unpack(header)
    if not 2 <= length <= 256:
        raise FramingError(f"implausible MBAP length {length}")
    body = _recv_exact(sock, length)
    return transaction_id, body[0], protocol_id, body[1:]


@dataclass
class ClientConfig:
    host: str
    port: int = MODBUS_PORT
    unit_id: int = 0xFF
    timeout_ms: int = 1000
    max_outstanding: int = 10

    def __post_init__(self):
        if not self.timeout_ms > 0:
            raise DomainError("timeout must be > 0")
        if not 1 <= self.max_outstanding <= 16:
            raise DomainError("max_outstanding must be in 1..16")


class ModbusClient:
    """Modbus TCP client with transaction pairing over one persistent connection.

    A handle is usable from one caller at a time; use one client per task for
    concurrent access.
    """

    def __init__(self, config: ClientConfig):
        self.config = config
        self._sock: socket.socket | None = None
        self._next_tid = 0

    # -- connection management ------------------------------------------------

    def connect(self) -> None:
        if self._sock is not None:
            return
        try:
            sock = socket.create_connection(
                (self.config.host, self.config.port), timeout=self.config.timeout_ms / 1000.0
            )
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError as exc:
            raise TransportError(f"cannot connect to {self.config.host}:{self.config.port}: {exc}") from exc
        self._sock = sock

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None

    def __enter__(self) -> "ModbusClient":
        self.connect()
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _take_tid(self) -> int:
        tid = self._next_tid
        self._next_tid = (self._next_tid + 1) & 0xFFFF
        return tid

    # -- transactions -----------------------------------------------------------

    def transact(self, request: RequestPdu) -> ResponsePdu:
        """Send one request and return the matching response.

        Exception responses are returned as values, not raised. Retries the
        connection once after a transport error, then surfaces it.
        """
        try:
            return self._transact_batch([request])[0]
        except TransportError:
            self.close()
            self.connect()
            return self._transact_batch([request])[0]

    def transact_pipelined(self, requests: list[RequestPdu]) -> list[ResponsePdu]:
        """Write all requests before reading; responses are matched to requests
        by transaction id regardless of arrival order."""
        if len(requests) > self.config.max_outstanding:
            raise DomainError(
                f"{len(requests)} requests exceed max_outstanding={self.config.max_outstanding}"
            )
        if not requests:
            return []
        try:
            return self._transact_batch(requests)
        except TransportError:
            self.close()
            self.connect()
            return self._transact_batch(requests)

    def _transact_batch(self, requests: list[RequestPdu]) -> list[ResponsePdu]:
        self.connect()
        sock = self._sock
        assert sock is not None
        pending: dict[int, int] = {}  # tid -> index into requests
        out = b""
        for i, request in enumerate(requests):
            tid = self._take_tid()
            pending[tid] = i
            out += encode_frame(Adu.for_pdu(tid, self.config.unit_id, request))
        try:
            sock.sendall(out)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

        responses: dict[int, ResponsePdu] = {}
        deadline = self.config.timeout_ms / 1000.0
        start = time.monotonic()
        while pending:
            remaining = deadline - (time.monotonic() - start)
            if remaining <= 0:
                raise RequestTimeout(f"no response within {self.config.timeout_ms} ms")
            sock.settimeout(remaining)
            try:
                tid, _unit, protocol_id, pdu_bytes = _read_raw_adu(sock)
            except socket.timeout:
                raise RequestTimeout(f"no response within {self.config.timeout_ms} ms") from None
            if protocol_id != 0:
                raise ProtocolError(f"protocol id must be 0, got {protocol_id}")
            if tid not in pending:
                log.warning("discarding response with unknown transaction id %d", tid)
                continue
            index = pending.pop(tid)
            expected = codec.function_code_of(requests[index])
            responses[index] = decode_response_pdu(pdu_bytes, expected_function=expected)
        return [responses[i] for i in range(len(requests))]


@dataclass
class ServerConfig:
    host: str
    port: int
    handler: Callable[[RequestPdu], ResponsePdu]
    max_connections: int = 8
    # Unit ids accepted in addition to the direct-TCP values 00H/FFH; requests
    # for any other id get a gateway-style exception.
    bridge_unit_id: int = 0x01

    def __post_init__(self):
        if not self.max_connections >= 1:
            raise DomainError("max_connections must be >= 1")


class ModbusServer:
    """Threaded Modbus TCP server: one task per accepted connection.

    The handler receives an immutable request and returns a response; it must
    be safe for concurrent invocation. stop() is graceful and idempotent:
    accepting halts, in-flight requests drain, then connections close.
    """

    _POLL_S = 0.1

    def __init__(self, config: ServerConfig):
        self.config = config
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._conn_threads: set[threading.Thread] = set()
        self._conn_lock = threading.Lock()
        self._active = 0
        self._stopping = threading.Event()

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None, "server not started"
        return self._listener.getsockname()[:2]

    def start(self) -> "ModbusServer":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind((self.config.host, self.config.port))
        except OSError as exc:
            listener.close()
            raise StartupError(f"cannot bind {self.config.host}:{self.config.port}: {exc}") from exc
        listener.listen(self.config.max_connections)
        listener.settimeout(self._POLL_S)
        self._listener = listener
        self._stopping.clear()
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True,
                                               name="modbus-accept")
        self._accept_thread.start()
        return self

    def stop(self) -> None:
        if self._stopping.is_set() and self._listener is None:
            return
        self._stopping.set()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)
            self._accept_thread = None
        with self._conn_lock:
            threads = list(self._conn_threads)
        for t in threads:
            t.join(timeout=2.0)
        if self._listener is not None:
            self._listener.close()
            self._listener = None

    def __enter__(self) -> "ModbusServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                conn, peer = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            with self._conn_lock:
                if self._active >= self.config.max_connections:
                    conn.close()
                    log.warning("refused connection from %s: limit %d reached",
                                peer, self.config.max_connections)
                    continue
                self._active += 1
                thread = threading.Thread(target=self._serve_connection, args=(conn, peer),
                                          daemon=True, name=f"modbus-conn-{peer}")
                self._conn_threads.add(thread)
            thread.start()

    def _serve_connection(self, conn: socket.socket, peer) -> None:
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        try:
            while True:
                try:
                    raw = self._read_request(conn)
                except _ShutdownRequested:
                    break
                if raw is None:
                    break
                tid, unit_id, protocol_id, pdu_bytes = raw
                if protocol_id != 0:
                    log.warning("closing %s: protocol id %d", peer, protocol_id)
                    break
                response = self._dispatch(unit_id, pdu_bytes)
                if response is None:
                    break  # malformed frame: close the connection
                conn.sendall(encode_frame(Adu.for_pdu(tid, unit_id, response)))
        except (TransportError, OSError):
            pass
        finally:
            conn.close()
            with self._conn_lock:
                self._active -= 1
                self._conn_threads.discard(threading.current_thread())

    def _read_request(self, conn: socket.socket):
        """Read one ADU, polling the stop flag between frames (not mid-frame,
        so an in-flight request always drains)."""
        buf = bytearray()
        conn.settimeout(self._POLL_S)
        while len(buf) < 6:
            if self._stopping.is_set() and not buf:
                raise _ShutdownRequested()
            try:
                chunk = conn.recv(6 - len(buf))
            except socket.timeout:
                continue
            if not chunk:
                return None
            buf.extend(chunk)
        tid, protocol_id, length = _HDR.unpack(bytes(buf))
        if not 2 <= length <= 256:
            raise TransportError(f"implausible MBAP length {length}")
        conn.settimeout(5.0)  # a started frame must complete promptly
        body = _recv_exact(conn, length)
        return tid, body[0], protocol_id, body[1:]

    def _dispatch(self, unit_id: int, pdu_bytes: bytes) -> ResponsePdu | None:
        try:
            request = decode_request_pdu(pdu_bytes)
        except UnsupportedFunctionError as exc:
            return build_exception(exc.function & 0x7F, ExceptionCode.ILLEGAL_FUNCTION)
        except InvalidFieldError as exc:
            return build_exception(exc.function, ExceptionCode.ILLEGAL_DATA_VALUE)
        except DecodeError:
            return None
        if unit_id not in (0x00, 0xFF, self.config.bridge_unit_id):
            return build_exception(codec.function_code_of(request),
                                   ExceptionCode.GATEWAY_TARGET_FAILED)
        try:
            return self.config.handler(request)
        except Exception:
            log.exception("handler failed for %r", request)
            return build_exception(codec.function_code_of(request),
                                   ExceptionCode.DEVICE_FAILURE)


class _ShutdownRequested(Exception):
    pass
