"""Modbus TCP/IP: byte-exact ADU codec plus TCP client and server."""

from .codec import (  # noqa: F401
    MODBUS_PORT,
    Adu,
    ExceptionCode,
    ExceptionResponse,
    ForceMultipleCoils,
    ForceMultipleCoilsResponse,
    ForceSingleCoil,
    ForceSingleCoilResponse,
    MbapHeader,
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
    decode_frame,
    encode_frame,
    pack_bits,
    unpack_bits,
)
from .net import ClientConfig, ModbusClient, ModbusServer, ServerConfig  # noqa: F401
