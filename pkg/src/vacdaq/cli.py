"""Command line entry point: emulator, acquisition engine, one-shot reads and
the physics calculator.

Exit codes: 0 success, 1 domain/configuration error, 2 transport error.
"""
from __future__ import annotations

import argparse
import json
import os
import signal
import sys
import threading

from . import __version__
from .daq.api import ApiServer
from .daq.config import load_engine_config
from .daq.engine import AcquisitionEngine
from .daq.pipeline import convert_count
from .emulator import ANALOG_MIDPOINT, AdamEmulator, load_scenario
from .errors import ConfigurationError, DomainError, TransportError, VacdaqError
from .modbus.codec import (
    ExceptionResponse,
    ReadCoils,
    ReadCoilsResponse,
    ReadHoldingRegisters,
    ReadInputRegisters,
)
from .modbus.net import ClientConfig, ModbusClient
from .vacphys import (
    AIR,
    FlowKind,
    GasParams,
    PipeSpec,
    PressureUnit,
    PumpdownParams,
    combine_conductance,
    convert_pressure,
    mean_free_path,
    pipe_conductance,
    pumpdown_pressure,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_TRANSPORT = 2


def fmt_pressure(value: float) -> str:
    """Scientific notation, 4 significant digits (log format)."""
    return f"{value:.3e}"


def fmt_voltage(value: float) -> str:
    return f"{value:.5f}"


def _split_address(text: str, default_port: int) -> tuple[str, int]:
    if ":" in text:
        host, _, port = text.rpartition(":")
        return host, int(port)
    return text, default_port


def _emit(data: dict, lines: list[str], as_json: bool) -> None:
    if as_json:
        print(json.dumps(data))
    else:
        for line in lines:
            print(line)


# -- subcommands -------------------------------------------------------------------

def cmd_convert(args) -> int:
    from_unit = PressureUnit.parse(args.from_unit)
    to_unit = PressureUnit.parse(args.to_unit)
    result = convert_pressure(args.value, from_unit, to_unit)
    _emit({"value": result, "unit": to_unit.value}, [f"{result:.4g}"], args.format == "json")
    return EXIT_OK


def cmd_calc(args) -> int:
    if args.quantity == "mfp":
        gas = AIR if args.temperature is None else GasParams(
            temperature=args.temperature,
            molecule_mass=AIR.molecule_mass,
            molecule_diameter=AIR.molecule_diameter,
        )
        value = mean_free_path(args.pressure_pa, gas)
        _emit({"mean_free_path_m": value},
              [f"{value:.4g} m"], args.format == "json")
        return EXIT_OK

    if args.quantity == "conductance":
        values = []
        if args.regime is not None:
            spec = PipeSpec(
                diameter_cm=args.diameter,
                regime=FlowKind(args.regime),
                length_cm=args.length,
                mean_pressure_torr=args.pressure,
                area_cm2=args.area,
            )
            values.append(pipe_conductance(spec))
        if args.series:
            values = [combine_conductance(args.series, "series")]
        elif args.parallel:
            values = [combine_conductance(args.parallel, "parallel")]
        if not values:
            raise ConfigurationError("specify --regime, --series or --parallel")
        value = values[0]
        _emit({"conductance_l_per_s": value}, [f"{value:.4g} L/s"], args.format == "json")
        return EXIT_OK

    # pumpdown
    params = PumpdownParams(
        initial_pressure=args.p1,
        pump_inlet_pressure=args.p2,
        conductance_l_per_s=args.conductance,
        volume_l=args.volume,
        exponent_factor=args.exponent_factor,
    )
    value = pumpdown_pressure(params, args.time)
    _emit({"pressure": value}, [fmt_pressure(value)], args.format == "json")
    return EXIT_OK


def cmd_read(args) -> int:
    host, port = _split_address(args.target, 502)
    unit = PressureUnit.parse(args.pressure_unit)
    client = ModbusClient(ClientConfig(host=host, port=port, unit_id=args.unit,
                                       timeout_ms=args.timeout))
    request = {
        1: ReadCoils(args.start, args.count),
        3: ReadHoldingRegisters(args.start, args.count),
        4: ReadInputRegisters(args.start, args.count),
    }[args.fc]
    with client:
        response = client.transact(request)
    if isinstance(response, ExceptionResponse):
        print(f"device exception: {response.code.name} ({int(response.code):02X}H)",
              file=sys.stderr)
        return EXIT_DOMAIN

    if isinstance(response, ReadCoilsResponse):
        bits = response.bits(args.count)
        rows = [{"offset": args.start + i, "on": on} for i, on in enumerate(bits)]
        _emit({"coils": rows},
              [f"coil {r['offset']}: {'ON' if r['on'] else 'OFF'}" for r in rows],
              args.format == "json")
        return EXIT_OK

    rows = []
    lines = []
    for i, raw in enumerate(response.values):
        offset = args.start + i
        if args.fc == 4:
            converted = convert_count(raw, unit, args.midpoint)
            rows.append({"offset": offset, "raw": raw, "voltage": converted.voltage,
                         "pressure": converted.pressure, "unit": unit.value,
                         "flag": converted.status.value})
            lines.append(
                f"reg {offset}: raw {raw}  {fmt_voltage(converted.voltage)} V  "
                f"{fmt_pressure(converted.pressure)} {unit.value}  [{converted.status.value}]")
        else:
            rows.append({"offset": offset, "raw": raw})
            lines.append(f"reg {offset}: raw {raw}")
    _emit({"registers": rows}, lines, args.format == "json")
    return EXIT_OK


def _wait_for_interrupt(on_stop) -> None:
    stop = threading.Event()

    def handler(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, handler)
    signal.signal(signal.SIGTERM, handler)
    try:
        while not stop.wait(0.5):
            pass
    finally:
        on_stop()


def cmd_emulate(args) -> int:
    scenario = load_scenario(args.scenario)
    host, port = _split_address(args.listen, 1502)
    emulator = AdamEmulator(scenario, midpoint=args.midpoint,
                            tick_period_ms=args.tick_ms, version=__version__)
    emulator.serve(host, port)
    print(f"emulator listening on {host}:{port} (Ctrl-C to stop)")
    _wait_for_interrupt(emulator.shutdown)
    return EXIT_OK


def cmd_acquire(args) -> int:
    config_path = args.config or os.environ.get("VACDAQ_CONFIG")
    if not config_path:
        raise ConfigurationError("no config file: pass --config or set VACDAQ_CONFIG")
    config = load_engine_config(config_path)
    engine = AcquisitionEngine(config)
    engine.start()
    api = ApiServer(engine, config.serve_host, config.serve_port,
                    static_dir=config.static_dir)
    api.start()
    host, port = api.address
    print(f"acquisition running; HMI API on http://{host}:{port}/api/status "
          f"(log: {config.log_path})")

    def stop():
        api.stop()
        engine.shutdown()

    _wait_for_interrupt(stop)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vacdaq",
        description="Remote vacuum measurement: emulator, acquisition engine, "
                    "one-shot reads and the vacuum calculator.",
    )
    parser.add_argument("--version", action="version", version=f"vacdaq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("emulate", help="run the gauge-chassis emulator")
    p.add_argument("--scenario", required=True, help="YAML scenario file")
    p.add_argument("--listen", default="127.0.0.1:1502", help="listen address (host:port)")
    p.add_argument("--midpoint", type=int, default=ANALOG_MIDPOINT,
                   help="analog count midpoint (default %(default)s)")
    p.add_argument("--tick-ms", type=int, default=100, help="tick period in ms")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("acquire", help="run the acquisition engine with the HMI API")
    p.add_argument("--config", help="YAML engine config (default: $VACDAQ_CONFIG)")
    p.set_defaults(func=cmd_acquire)

    p = sub.add_parser("read", help="one Modbus transaction, decoded and converted")
    p.add_argument("--target", required=True, help="device address (host:port)")
    p.add_argument("--unit", type=int, default=1, help="unit identifier (default 1)")
    p.add_argument("--fc", type=int, choices=[1, 3, 4], default=4, help="function code")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--timeout", type=int, default=1000, help="timeout in ms")
    p.add_argument("--midpoint", type=int, default=ANALOG_MIDPOINT)
    p.add_argument("--pressure-unit", default="mbar")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_read)

    p = sub.add_parser("calc", help="vacuum physics calculator")
    calc_sub = p.add_subparsers(dest="quantity", required=True)

    q = calc_sub.add_parser("mfp", help="mean free path of air")
    q.add_argument("--pressure-pa", type=float, required=True)
    q.add_argument("--temperature", type=float, default=None, help="K (default 300)")
    q.add_argument("--format", choices=["text", "json"], default="text")
    q.set_defaults(func=cmd_calc)

    q = calc_sub.add_parser("conductance", help="tube/aperture conductance")
    q.add_argument("--regime", choices=[k.value for k in FlowKind])
    q.add_argument("--d", dest="diameter", type=float, default=1.0, help="diameter, cm")
    q.add_argument("--l", dest="length", type=float, help="length, cm")
    q.add_argument("--p", dest="pressure", type=float, help="mean pressure, Torr (viscous)")
    q.add_argument("--area", type=float, help="aperture area, cm^2")
    q.add_argument("--series", type=float, nargs="+", help="combine in series, L/s")
    q.add_argument("--parallel", type=float, nargs="+", help="combine in parallel, L/s")
    q.add_argument("--format", choices=["text", "json"], default="text")
    q.set_defaults(func=cmd_calc)

    q = calc_sub.add_parser("pumpdown", help="chamber pressure during pump-down")
    q.add_argument("--p1", type=float, required=True, help="initial pressure")
    q.add_argument("--p2", type=float, required=True, help="pump inlet pressure")
    q.add_argument("--c", dest="conductance", type=float, required=True, help="L/s")
    q.add_argument("--v", dest="volume", type=float, required=True, help="liters")
    q.add_argument("--t", dest="time", type=float, required=True, help="seconds")
    q.add_argument("--exponent-factor", type=float, default=1.0)
    q.add_argument("--format", choices=["text", "json"], default="text")
    q.set_defaults(func=cmd_calc)

    p = sub.add_parser("convert", help="convert a pressure between units")
    p.add_argument("value", type=float)
    p.add_argument("from_unit")
    p.add_argument("to_unit")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (DomainError, ConfigurationError, VacdaqError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
