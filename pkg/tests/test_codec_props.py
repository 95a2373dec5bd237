"""Randomized decode(encode(x)) = x over every PDU variant and header."""
import random

import pytest
from hypothesis import given, settings, strategies as st

from vacdaq.modbus.codec import (
    Adu,
    ExceptionCode,
    ExceptionResponse,
    ForceMultipleCoils,
    ForceMultipleCoilsResponse,
    ForceSingleCoil,
    ForceSingleCoilResponse,
    MAX_COIL_COUNT,
    MAX_REGISTER_COUNT,
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
    SUPPORTED_FUNCTIONS,
    decode_frame,
    encode_frame,
)

u16 = st.integers(min_value=0, max_value=0xFFFF)
u8 = st.integers(min_value=0, max_value=0xFF)
bits = st.lists(st.booleans(), min_size=1, max_size=64).map(tuple)
registers = st.lists(u16, min_size=1, max_size=MAX_REGISTER_COUNT).map(tuple)

request_pdus = st.one_of(
    st.builds(ReadCoils, u16, st.integers(1, MAX_COIL_COUNT)),
    st.builds(ReadHoldingRegisters, u16, st.integers(1, MAX_REGISTER_COUNT)),
    st.builds(ReadInputRegisters, u16, st.integers(1, MAX_REGISTER_COUNT)),
    st.builds(ForceSingleCoil, u16, st.booleans()),
    st.builds(PresetSingleRegister, u16, u16),
    st.builds(ForceMultipleCoils, u16, bits),
    st.builds(PresetMultipleRegisters, u16, registers),
    st.just(ReportSlaveId()),
)

response_pdus = st.one_of(
    st.builds(ReadCoilsResponse, st.binary(min_size=1, max_size=250)),
    st.builds(ReadHoldingRegistersResponse, registers),
    st.builds(ReadInputRegistersResponse, registers),
    st.builds(ForceSingleCoilResponse, u16, st.booleans()),
    st.builds(PresetSingleRegisterResponse, u16, u16),
    st.builds(ForceMultipleCoilsResponse, u16, u16),
    st.builds(PresetMultipleRegistersResponse, u16, u16),
    st.builds(ReportSlaveIdResponse, st.binary(min_size=1, max_size=255)),
    st.builds(
        ExceptionResponse,
        st.sampled_from(sorted(SUPPORTED_FUNCTIONS)).map(lambda f: f | 0x80),
        st.sampled_from(list(ExceptionCode)),
    ),
)


@settings(max_examples=500, deadline=None)
@given(u16, u8, request_pdus)
def test_request_round_trip(tid, unit, pdu):
    adu = Adu.for_pdu(tid, unit, pdu)
    assert decode_frame(encode_frame(adu), "request") == adu


@settings(max_examples=500, deadline=None)
@given(u16, u8, response_pdus)
def test_response_round_trip(tid, unit, pdu):
    adu = Adu.for_pdu(tid, unit, pdu)
    assert decode_frame(encode_frame(adu), "response") == adu


def random_adu(rng: random.Random) -> tuple[Adu, str]:
    """Seeded generator covering all 8 function codes plus exceptions."""
    tid = rng.randrange(0x10000)
    unit = rng.randrange(0x100)
    kind = rng.randrange(17)
    if kind == 0:
        pdu, direction = ReadCoils(rng.randrange(0x10000), rng.randint(1, MAX_COIL_COUNT)), "request"
    elif kind == 1:
        pdu, direction = ReadHoldingRegisters(rng.randrange(0x10000), rng.randint(1, MAX_REGISTER_COUNT)), "request"
    elif kind == 2:
        pdu, direction = ReadInputRegisters(rng.randrange(0x10000), rng.randint(1, MAX_REGISTER_COUNT)), "request"
    elif kind == 3:
        pdu, direction = ForceSingleCoil(rng.randrange(0x10000), rng.random() < 0.5), "request"
    elif kind == 4:
        pdu, direction = PresetSingleRegister(rng.randrange(0x10000), rng.randrange(0x10000)), "request"
    elif kind == 5:
        n = rng.randint(1, 200)
        pdu, direction = ForceMultipleCoils(rng.randrange(0x10000),
                                            tuple(rng.random() < 0.5 for _ in range(n))), "request"
    elif kind == 6:
        n = rng.randint(1, MAX_REGISTER_COUNT)
        pdu, direction = PresetMultipleRegisters(rng.randrange(0x10000),
                                                 tuple(rng.randrange(0x10000) for _ in range(n))), "request"
    elif kind == 7:
        pdu, direction = ReportSlaveId(), "request"
    elif kind == 8:
        pdu, direction = ReadCoilsResponse(rng.randbytes(rng.randint(1, 250))), "response"
    elif kind == 9:
        n = rng.randint(1, MAX_REGISTER_COUNT)
        pdu, direction = ReadHoldingRegistersResponse(tuple(rng.randrange(0x10000) for _ in range(n))), "response"
    elif kind == 10:
        n = rng.randint(1, MAX_REGISTER_COUNT)
        pdu, direction = ReadInputRegistersResponse(tuple(rng.randrange(0x10000) for _ in range(n))), "response"
    elif kind == 11:
        pdu, direction = ForceSingleCoilResponse(rng.randrange(0x10000), rng.random() < 0.5), "response"
    elif kind == 12:
        pdu, direction = PresetSingleRegisterResponse(rng.randrange(0x10000), rng.randrange(0x10000)), "response"
    elif kind == 13:
        pdu, direction = ForceMultipleCoilsResponse(rng.randrange(0x10000), rng.randrange(0x10000)), "response"
    elif kind == 14:
        pdu, direction = PresetMultipleRegistersResponse(rng.randrange(0x10000), rng.randrange(0x10000)), "response"
    elif kind == 15:
        pdu, direction = ReportSlaveIdResponse(rng.randbytes(rng.randint(1, 255))), "response"
    else:
        function = rng.choice(sorted(SUPPORTED_FUNCTIONS)) | 0x80
        pdu, direction = ExceptionResponse(function, rng.choice(list(ExceptionCode))), "response"
    return Adu.for_pdu(tid, unit, pdu), direction


@pytest.mark.parametrize("seed", [1234])
def test_bulk_round_trip_10k(seed):
    rng = random.Random(seed)
    for _ in range(10_000):
        adu, direction = random_adu(rng)
        raw = encode_frame(adu)
        assert int.from_bytes(raw[4:6], "big") == len(raw) - 6
        assert decode_frame(raw, direction) == adu
