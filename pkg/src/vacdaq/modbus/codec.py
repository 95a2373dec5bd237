"""Byte-exact Modbus TCP/IP ADU codec.

An ADU is the 7-byte MBAP header (transaction id, protocol id, length, unit
id) followed by the PDU (function code + data). All multi-byte fields are
big-endian; there is no checksum on TCP. Supported function codes: 01, 03,
04, 05, 06, 15, 16, 17 and exception responses (function + 80H).

PDU addresses are zero-based wire offsets; the 0x/3x/4x reference prefixes
are documentation-level only and never appear on the wire.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence, Union

from ..errors import (
    DomainError,
    EncodeError,
    FramingError,
    InvalidFieldError,
    ProtocolError,
    UnsupportedFunctionError,
)

MODBUS_PORT = 502
MBAP_SIZE = 7
EXCEPTION_FLAG = 0x80

FC_READ_COILS = 0x01
FC_READ_HOLDING_REGISTERS = 0x03
FC_READ_INPUT_REGISTERS = 0x04
FC_FORCE_SINGLE_COIL = 0x05
FC_PRESET_SINGLE_REGISTER = 0x06
FC_FORCE_MULTIPLE_COILS = 0x0F
FC_PRESET_MULTIPLE_REGISTERS = 0x10
FC_REPORT_SLAVE_ID = 0x11

COIL_ON = 0xFF00
COIL_OFF = 0x0000

# Per-request bounds (standard limits; the wire format itself allows more).
MAX_COIL_COUNT = 2000
MAX_REGISTER_COUNT = 125


class ExceptionCode(IntEnum):
    ILLEGAL_FUNCTION = 0x01
    ILLEGAL_DATA_ADDRESS = 0x02
    ILLEGAL_DATA_VALUE = 0x03
    DEVICE_FAILURE = 0x04
    ACKNOWLEDGE = 0x05
    DEVICE_BUSY = 0x06
    NEGATIVE_ACKNOWLEDGE = 0x07
    MEMORY_PARITY_ERROR = 0x08
    GATEWAY_PATH_UNAVAILABLE = 0x0A
    GATEWAY_TARGET_FAILED = 0x0B
    EXTENDED_EXCEPTION = 0xFF


def _check_u16(value: int, what: str) -> int:
    if not 0 <= value <= 0xFFFF:
        raise EncodeError(f"{what} must fit in 16 bits, got {value!r}")
    return value


def _check_u8(value: int, what: str) -> int:
    if not 0 <= value <= 0xFF:
        raise EncodeError(f"{what} must fit in 8 bits, got {value!r}")
    return value


# --- bit packing --------------------------------------------------------------

def pack_bits(bits: Sequence[bool] | Iterable[bool]) -> bytes:
    """Pack coil states one per bit, lowest-addressed coil in the LSB of the
    first byte; unused high-order bits are zero."""
    bit_list = list(bits)
    out = bytearray((len(bit_list) + 7) // 8)
    for i, on in enumerate(bit_list):
        if on:
            out[i // 8] |= 1 << (i % 8)
    return bytes(out)


def unpack_bits(data: bytes, count: int) -> tuple[bool, ...]:
    """Inverse of pack_bits for the first `count` bits of `data`."""
    if count < 0 or count > 8 * len(data):
        raise FramingError(f"cannot unpack {count} bits from {len(data)} bytes")
    return tuple(bool(data[i // 8] >> (i % 8) & 1) for i in range(count))


# --- PDU variants --------------------------------------------------------------

@dataclass(frozen=True)
class ReadCoils:
    start: int
    count: int
    FUNCTION = FC_READ_COILS


@dataclass(frozen=True)
class ReadHoldingRegisters:
    start: int
    count: int
    FUNCTION = FC_READ_HOLDING_REGISTERS


@dataclass(frozen=True)
class ReadInputRegisters:
    start: int
    count: int
    FUNCTION = FC_READ_INPUT_REGISTERS


@dataclass(frozen=True)
class ForceSingleCoil:
    address: int
    on: bool
    FUNCTION = FC_FORCE_SINGLE_COIL


@dataclass(frozen=True)
class PresetSingleRegister:
    address: int
    value: int
    FUNCTION = FC_PRESET_SINGLE_REGISTER


@dataclass(frozen=True)
class ForceMultipleCoils:
    start: int
    bits: tuple[bool, ...]
    FUNCTION = FC_FORCE_MULTIPLE_COILS

    @property
    def count(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class PresetMultipleRegisters:
    start: int
    values: tuple[int, ...]
    FUNCTION = FC_PRESET_MULTIPLE_REGISTERS

    @property
    def count(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ReportSlaveId:
    FUNCTION = FC_REPORT_SLAVE_ID


@dataclass(frozen=True)
class ReadCoilsResponse:
    data: bytes  # packed coil bytes, exactly as on the wire
    FUNCTION = FC_READ_COILS

    def bits(self, count: int) -> tuple[bool, ...]:
        return unpack_bits(self.data, count)


@dataclass(frozen=True)
class ReadHoldingRegistersResponse:
    values: tuple[int, ...]
    FUNCTION = FC_READ_HOLDING_REGISTERS


@dataclass(frozen=True)
class ReadInputRegistersResponse:
    values: tuple[int, ...]
    FUNCTION = FC_READ_INPUT_REGISTERS


@dataclass(frozen=True)
class ForceSingleCoilResponse:
    address: int
    on: bool
    FUNCTION = FC_FORCE_SINGLE_COIL


@dataclass(frozen=True)
class PresetSingleRegisterResponse:
    address: int
    value: int
    FUNCTION = FC_PRESET_SINGLE_REGISTER


@dataclass(frozen=True)
class ForceMultipleCoilsResponse:
    start: int
    count: int
    FUNCTION = FC_FORCE_MULTIPLE_COILS


@dataclass(frozen=True)
class PresetMultipleRegistersResponse:
    start: int
    count: int
    FUNCTION = FC_PRESET_MULTIPLE_REGISTERS


@dataclass(frozen=True)
class ReportSlaveIdResponse:
    payload: bytes  # device-defined bytes after the byte count
    FUNCTION = FC_REPORT_SLAVE_ID


@dataclass(frozen=True)
class ExceptionResponse:
    function: int  # original function + 80H
    code: ExceptionCode

    def __post_init__(self):
        if not self.function & EXCEPTION_FLAG:
            raise EncodeError("exception function byte must have the msb set")


RequestPdu = Union[
    ReadCoils, ReadHoldingRegisters, ReadInputRegisters, ForceSingleCoil,
    PresetSingleRegister, ForceMultipleCoils, PresetMultipleRegisters, ReportSlaveId,
]
ResponsePdu = Union[
    ReadCoilsResponse, ReadHoldingRegistersResponse, ReadInputRegistersResponse,
    ForceSingleCoilResponse, PresetSingleRegisterResponse, ForceMultipleCoilsResponse,
    PresetMultipleRegistersResponse, ReportSlaveIdResponse, ExceptionResponse,
]
Pdu = Union[RequestPdu, ResponsePdu]

_REQUEST_TYPES = {
    FC_READ_COILS: ReadCoils,
    FC_READ_HOLDING_REGISTERS: ReadHoldingRegisters,
    FC_READ_INPUT_REGISTERS: ReadInputRegisters,
    FC_FORCE_SINGLE_COIL: ForceSingleCoil,
    FC_PRESET_SINGLE_REGISTER: PresetSingleRegister,
    FC_FORCE_MULTIPLE_COILS: ForceMultipleCoils,
    FC_PRESET_MULTIPLE_REGISTERS: PresetMultipleRegisters,
    FC_REPORT_SLAVE_ID: ReportSlaveId,
}
SUPPORTED_FUNCTIONS = frozenset(_REQUEST_TYPES)


def build_exception(request_function: int, code: ExceptionCode) -> ExceptionResponse:
    """Exception response for a request function: function + 80H plus the code."""
    if not 0 <= request_function < EXCEPTION_FLAG:
        raise DomainError(f"request function must be below 80H, got {request_function!r}")
    return ExceptionResponse(request_function + EXCEPTION_FLAG, ExceptionCode(code))


def function_code_of(pdu: Pdu) -> int:
    """Wire function code of any PDU variant (including the 80H exception flag)."""
    if isinstance(pdu, ExceptionResponse):
        return pdu.function
    return pdu.FUNCTION


# --- MBAP / ADU -----------------------------------------------------------------

@dataclass(frozen=True)
class MbapHeader:
    """7-byte header: length counts the unit id byte plus the PDU bytes."""

    transaction_id: int
    length: int
    unit_id: int
    protocol_id: int = 0


@dataclass(frozen=True)
class Adu:
    header: MbapHeader
    pdu: Pdu

    @classmethod
    def for_pdu(cls, transaction_id: int, unit_id: int, pdu: Pdu) -> "Adu":
        """Build an ADU with the length field computed from the PDU."""
        length = 1 + len(encode_pdu(pdu))
        return cls(MbapHeader(transaction_id, length, unit_id), pdu)


def encode_pdu(pdu: Pdu) -> bytes:
    """Encode any PDU variant to its wire bytes (function code included)."""
    if isinstance(pdu, (ReadCoils, ReadHoldingRegisters, ReadInputRegisters)):
        limit = MAX_COIL_COUNT if isinstance(pdu, ReadCoils) else MAX_REGISTER_COUNT
        if not 1 <= pdu.count <= limit:
            raise EncodeError(f"read count must be in 1..{limit}, got {pdu.count}")
        return struct.pack(">BHH", pdu.FUNCTION, _check_u16(pdu.start, "start"), pdu.count)

    if isinstance(pdu, (ForceSingleCoil, ForceSingleCoilResponse)):
        value = COIL_ON if pdu.on else COIL_OFF
        return struct.pack(">BHH", pdu.FUNCTION, _check_u16(pdu.address, "address"), value)

    if isinstance(pdu, (PresetSingleRegister, PresetSingleRegisterResponse)):
        return struct.pack(
            ">BHH", pdu.FUNCTION,
            _check_u16(pdu.address, "address"), _check_u16(pdu.value, "register value"),
        )

    if isinstance(pdu, ForceMultipleCoils):
        if not 1 <= pdu.count <= MAX_COIL_COUNT:
            raise EncodeError(f"coil count must be in 1..{MAX_COIL_COUNT}, got {pdu.count}")
        payload = pack_bits(pdu.bits)
        return struct.pack(
            ">BHHB", pdu.FUNCTION, _check_u16(pdu.start, "start"), pdu.count, len(payload)
        ) + payload

    if isinstance(pdu, PresetMultipleRegisters):
        if not 1 <= pdu.count <= MAX_REGISTER_COUNT:
            raise EncodeError(f"register count must be in 1..{MAX_REGISTER_COUNT}, got {pdu.count}")
        body = b"".join(struct.pack(">H", _check_u16(v, "register value")) for v in pdu.values)
        # The byte-count field follows the register count, per the standard
        # request layout: byte count = 2 x register count.
        return struct.pack(
            ">BHHB", pdu.FUNCTION, _check_u16(pdu.start, "start"), pdu.count, len(body)
        ) + body

    if isinstance(pdu, ReportSlaveId):
        return struct.pack(">B", pdu.FUNCTION)

    if isinstance(pdu, ReadCoilsResponse):
        if not 1 <= len(pdu.data) <= (MAX_COIL_COUNT + 7) // 8:
            raise EncodeError(f"coil data must be 1..250 bytes, got {len(pdu.data)}")
        return struct.pack(">BB", pdu.FUNCTION, len(pdu.data)) + bytes(pdu.data)

    if isinstance(pdu, (ReadHoldingRegistersResponse, ReadInputRegistersResponse)):
        if not 1 <= len(pdu.values) <= MAX_REGISTER_COUNT:
            raise EncodeError(f"register count must be in 1..{MAX_REGISTER_COUNT}, got {len(pdu.values)}")
        body = b"".join(struct.pack(">H", _check_u16(v, "register value")) for v in pdu.values)
        return struct.pack(">BB", pdu.FUNCTION, len(body)) + body

    if isinstance(pdu, (ForceMultipleCoilsResponse, PresetMultipleRegistersResponse)):
        return struct.pack(
            ">BHH", pdu.FUNCTION, _check_u16(pdu.start, "start"), _check_u16(pdu.count, "count")
        )

    if isinstance(pdu, ReportSlaveIdResponse):
        if not 1 <= len(pdu.payload) <= 0xFF:
            raise EncodeError(f"slave id payload must be 1..255 bytes, got {len(pdu.payload)}")
        return struct.pack(">BB", pdu.FUNCTION, len(pdu.payload)) + bytes(pdu.payload)

    if isinstance(pdu, ExceptionResponse):
        return struct.pack(">BB", _check_u8(pdu.function, "function"), pdu.code)

    raise EncodeError(f"cannot encode PDU of type {type(pdu).__name__}")


def encode_frame(adu: Adu) -> bytes:
    """Encode a full ADU. The MBAP length field is always recomputed from the
    PDU, never trusted from the caller."""
    pdu_bytes = encode_pdu(adu.pdu)
    header = adu.header
    return struct.pack(
        ">HHHB",
        _check_u16(header.transaction_id, "transaction id"),
        _check_u16(header.protocol_id, "protocol id"),
        1 + len(pdu_bytes),
        _check_u8(header.unit_id, "unit id"),
    ) + pdu_bytes


def _need(data: bytes, size: int, what: str) -> None:
    if len(data) != size:
        raise FramingError(f"{what}: expected {size} bytes, got {len(data)}")


def decode_request_pdu(data: bytes) -> RequestPdu:
    """Decode a request PDU (function code + data)."""
    if not data:
        raise FramingError("empty PDU")
    function = data[0]
    if function not in SUPPORTED_FUNCTIONS:
        raise UnsupportedFunctionError(function)

    if function in (FC_READ_COILS, FC_READ_HOLDING_REGISTERS, FC_READ_INPUT_REGISTERS):
        _need(data, 5, "read request")
        start, count = struct.unpack(">HH", data[1:5])
        limit = MAX_COIL_COUNT if function == FC_READ_COILS else MAX_REGISTER_COUNT
        if not 1 <= count <= limit:
            raise InvalidFieldError(function, f"read count {count} outside 1..{limit}")
        return _REQUEST_TYPES[function](start, count)

    if function == FC_FORCE_SINGLE_COIL:
        _need(data, 5, "force single coil request")
        address, value = struct.unpack(">HH", data[1:5])
        if value not in (COIL_ON, COIL_OFF):
            raise InvalidFieldError(function, f"force value 0x{value:04X} is not FF00H or 0000H")
        return ForceSingleCoil(address, value == COIL_ON)

    if function == FC_PRESET_SINGLE_REGISTER:
        _need(data, 5, "preset single register request")
        address, value = struct.unpack(">HH", data[1:5])
        return PresetSingleRegister(address, value)

    if function == FC_FORCE_MULTIPLE_COILS:
        if len(data) < 6:
            raise FramingError("force multiple coils request truncated")
        start, count, byte_count = struct.unpack(">HHB", data[1:6])
        if not 1 <= count <= MAX_COIL_COUNT:
            raise InvalidFieldError(function, f"coil count {count} outside 1..{MAX_COIL_COUNT}")
        if byte_count != (count + 7) // 8:
            raise FramingError(f"coil byte count {byte_count} does not match count {count}")
        _need(data, 6 + byte_count, "force multiple coils payload")
        return ForceMultipleCoils(start, unpack_bits(data[6:], count))

    if function == FC_PRESET_MULTIPLE_REGISTERS:
        if len(data) < 6:
            raise FramingError("preset multiple registers request truncated")
        start, count, byte_count = struct.unpack(">HHB", data[1:6])
        if not 1 <= count <= MAX_REGISTER_COUNT:
            raise InvalidFieldError(function, f"register count {count} outside 1..{MAX_REGISTER_COUNT}")
        if byte_count != 2 * count:
            raise FramingError(f"register byte count {byte_count} does not match count {count}")
        _need(data, 6 + byte_count, "preset multiple registers payload")
        values = struct.unpack(f">{count}H", data[6:])
        return PresetMultipleRegisters(start, values)

    # FC_REPORT_SLAVE_ID
    _need(data, 1, "report slave id request")
    return ReportSlaveId()


def decode_response_pdu(data: bytes, expected_function: int | None = None) -> ResponsePdu:
    """Decode a response PDU; a function code of expected_function + 80H (or any
    code with the msb set) decodes as an exception response."""
    if not data:
        raise FramingError("empty PDU")
    function = data[0]

    if function & EXCEPTION_FLAG:
        if expected_function is not None and function != (expected_function | EXCEPTION_FLAG):
            raise ProtocolError(
                f"exception function 0x{function:02X} does not match request 0x{expected_function:02X}"
            )
        _need(data, 2, "exception response")
        try:
            code = ExceptionCode(data[1])
        except ValueError:
            raise ProtocolError(f"unknown exception code 0x{data[1]:02X}") from None
        return ExceptionResponse(function, code)

    if expected_function is not None and function != expected_function:
        raise ProtocolError(
            f"response function 0x{function:02X} does not match request 0x{expected_function:02X}"
        )
    if function not in SUPPORTED_FUNCTIONS:
        raise UnsupportedFunctionError(function)

    if function == FC_READ_COILS:
        if len(data) < 2:
            raise FramingError("read coils response truncated")
        byte_count = data[1]
        _need(data, 2 + byte_count, "read coils response payload")
        if byte_count < 1:
            raise FramingError("read coils response carries no data bytes")
        return ReadCoilsResponse(data[2:])

    if function in (FC_READ_HOLDING_REGISTERS, FC_READ_INPUT_REGISTERS):
        if len(data) < 2:
            raise FramingError("read registers response truncated")
        byte_count = data[1]
        if byte_count % 2 or byte_count < 2:
            raise FramingError(f"register response byte count {byte_count} is not a positive multiple of 2")
        _need(data, 2 + byte_count, "read registers response payload")
        values = struct.unpack(f">{byte_count // 2}H", data[2:])
        cls = (ReadHoldingRegistersResponse if function == FC_READ_HOLDING_REGISTERS
               else ReadInputRegistersResponse)
        return cls(values)

    if function == FC_FORCE_SINGLE_COIL:
        _need(data, 5, "force single coil response")
        address, value = struct.unpack(">HH", data[1:5])
        if value not in (COIL_ON, COIL_OFF):
            raise InvalidFieldError(function, f"force value 0x{value:04X} is not FF00H or 0000H")
        return ForceSingleCoilResponse(address, value == COIL_ON)

    if function == FC_PRESET_SINGLE_REGISTER:
        _need(data, 5, "preset single register response")
        address, value = struct.unpack(">HH", data[1:5])
        return PresetSingleRegisterResponse(address, value)

    if function in (FC_FORCE_MULTIPLE_COILS, FC_PRESET_MULTIPLE_REGISTERS):
        _need(data, 5, "write acknowledge response")
        start, count = struct.unpack(">HH", data[1:5])
        cls = (ForceMultipleCoilsResponse if function == FC_FORCE_MULTIPLE_COILS
               else PresetMultipleRegistersResponse)
        return cls(start, count)

    # FC_REPORT_SLAVE_ID
    if len(data) < 2:
        raise FramingError("report slave id response truncated")
    byte_count = data[1]
    _need(data, 2 + byte_count, "report slave id payload")
    if byte_count < 1:
        raise FramingError("report slave id response carries no payload")
    return ReportSlaveIdResponse(data[2:])


def decode_frame(raw: bytes, direction: str, expected_function: int | None = None) -> Adu:
    """Decode one complete ADU (header plus PDU, exactly length + 6 bytes).

    direction is 'request' or 'response'; responses may decode to exception
    variants. Raises FramingError on truncation or length mismatch and
    ProtocolError when the protocol id is nonzero.
    """
    if len(raw) < MBAP_SIZE + 1:
        raise FramingError(f"frame truncated: {len(raw)} bytes")
    transaction_id, protocol_id, length, unit_id = struct.unpack(">HHHB", raw[:MBAP_SIZE])
    if protocol_id != 0:
        raise ProtocolError(f"protocol id must be 0, got {protocol_id}")
    if len(raw) != MBAP_SIZE - 1 + length:
        raise FramingError(f"length field {length} does not match frame of {len(raw)} bytes")
    pdu_bytes = raw[MBAP_SIZE:]
    if direction == "request":
        pdu: Pdu = decode_request_pdu(pdu_bytes)
    elif direction == "response":
        pdu = decode_response_pdu(pdu_bytes, expected_function)
    else:
        raise DomainError(f"direction must be 'request' or 'response', got {direction!r}")
    return Adu(MbapHeader(transaction_id, length, unit_id, protocol_id), pdu)
