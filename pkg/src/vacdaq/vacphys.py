"""Vacuum physics formulas: pressure units, kinetic gas quantities, conductance, pump-down.

Everything here is a pure function of its inputs; the simulator and the CLI
calculator are the consumers. Practical-unit conventions follow vacuum-shop
usage: tube dimensions in centimeters, conductance in liters/second, pressures
in the unit stated per function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import ConfigurationError, DomainError

BOLTZMANN_J_PER_K = 1.380649e-23


class PressureUnit(str, Enum):
    PASCAL = "pascal"
    TORR = "torr"
    ATM = "atm"
    BAR = "bar"
    PSI = "psi"
    MBAR = "mbar"
    MICROBAR = "microbar"
    MTORR = "mtorr"
    MICRON = "micron"
    KPA = "kpa"

    @classmethod
    def parse(cls, name: str) -> "PressureUnit":
        """Parse a unit name, accepting the common short spellings."""
        key = name.strip().lower()
        aliases = {"pa": "pascal", "ubar": "microbar", "µbar": "microbar", "um": "micron"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"unknown pressure unit {name!r}") from None


# Factors 1 Pa = f x unit, taken from the Pascal row of the standard conversion
# table; the metric multiples (mbar, kPa, mTorr, ...) are exact decades of the
# bar/Torr entries. All cross-unit conversions pivot through Pa, so composite
# factors inherit the table's 3-4 digit rounding (round trips stay exact).
_PA_TO_UNIT: dict[PressureUnit, float] = {
    PressureUnit.PASCAL: 1.0,
    PressureUnit.TORR: 0.0075,
    PressureUnit.ATM: 9.87e-6,
    PressureUnit.BAR: 1e-5,
    PressureUnit.PSI: 1.45e-4,
    PressureUnit.MBAR: 1e-2,
    PressureUnit.MICROBAR: 10.0,
    PressureUnit.MTORR: 7.5,
    PressureUnit.MICRON: 7.5,
    PressureUnit.KPA: 1e-3,
}


def convert_pressure(value: float, from_unit: PressureUnit, to_unit: PressureUnit) -> float:
    """Convert a pressure between units, pivoting through Pa."""
    if not math.isfinite(value):
        raise DomainError(f"pressure must be finite, got {value!r}")
    if from_unit is to_unit:
        return value
    return value / _PA_TO_UNIT[from_unit] * _PA_TO_UNIT[to_unit]


# --- kinetic theory ---------------------------------------------------------

# Air molecule diameter back-solved so that lambda * P = 6.7 mm*Pa at 300 K,
# the standard quick-reference value for air.
AIR_TEMPERATURE_K = 300.0
AIR_MOLECULE_MASS_KG = 4.65e-26
AIR_MOLECULE_DIAMETER_M = math.sqrt(
    BOLTZMANN_J_PER_K * AIR_TEMPERATURE_K / (math.sqrt(2.0) * math.pi * 6.7e-3)
)


@dataclass(frozen=True)
class GasParams:
    """Gas state for kinetic-theory formulas. All fields strictly positive."""

    temperature: float  # K
    molecule_mass: float  # kg
    molecule_diameter: float  # m
    number_density: float = 2.45e25  # m^-3 (ambient air unless stated)
    boltzmann_constant: float = field(default=BOLTZMANN_J_PER_K, repr=False)

    def __post_init__(self):
        for name in ("temperature", "molecule_mass", "molecule_diameter",
                     "number_density", "boltzmann_constant"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")


AIR = GasParams(
    temperature=AIR_TEMPERATURE_K,
    molecule_mass=AIR_MOLECULE_MASS_KG,
    molecule_diameter=AIR_MOLECULE_DIAMETER_M,
)


def mean_free_path(pressure_pa: float, gas: GasParams = AIR) -> float:
    """Mean free path in meters: kT / (sqrt(2) pi d^2 p).

    For the default air parameters this evaluates to (6.7 / P) mm with P in Pa.
    """
    if not pressure_pa > 0:
        raise DomainError(f"pressure must be > 0, got {pressure_pa!r}")
    return (gas.boltzmann_constant * gas.temperature
            / (math.sqrt(2.0) * math.pi * gas.molecule_diameter ** 2 * pressure_pa))


def knudsen_number(mean_free_path_m: float, characteristic_length_m: float) -> float:
    """Kn = lambda / d. Kn >> 1 is molecular flow, Kn << 1 viscous flow."""
    if not characteristic_length_m > 0:
        raise DomainError("characteristic length must be > 0")
    return mean_free_path_m / characteristic_length_m


def flow_regime(kn: float, molecular_above: float = 1.0, viscous_below: float = 0.01) -> str:
    """Classify a Knudsen number as 'molecular', 'viscous' or 'transitional'."""
    if kn > molecular_above:
        return "molecular"
    if kn < viscous_below:
        return "viscous"
    return "transitional"


@dataclass(frozen=True)
class KineticSpeeds:
    most_probable: float  # m/s
    mean: float  # m/s
    surface_flux_per_density: float  # m/s; multiply by n for molecules/(m^2 s)


def kinetic_speeds(gas: GasParams = AIR) -> KineticSpeeds:
    """Maxwell-Boltzmann speed quantities: v_p = sqrt(2kT/m), mean = 2/sqrt(pi) v_p."""
    v_p = math.sqrt(2.0 * gas.boltzmann_constant * gas.temperature / gas.molecule_mass)
    v_bar = 2.0 / math.sqrt(math.pi) * v_p
    return KineticSpeeds(most_probable=v_p, mean=v_bar, surface_flux_per_density=v_bar / 4.0)


# --- conductance -------------------------------------------------------------

class FlowKind(str, Enum):
    VISCOUS = "viscous"
    MOLECULAR = "molecular"
    APERTURE = "aperture"


@dataclass(frozen=True)
class PipeSpec:
    """Geometry for a conductance calculation.

    diameter/length in cm; mean_pressure in Torr (viscous only); area in cm^2
    (aperture only, defaults to the circular area of `diameter`).
    """

    diameter_cm: float
    regime: FlowKind
    length_cm: float | None = None
    mean_pressure_torr: float | None = None
    area_cm2: float | None = None

    def __post_init__(self):
        if not self.diameter_cm > 0:
            raise DomainError("diameter must be > 0")
        if self.regime in (FlowKind.VISCOUS, FlowKind.MOLECULAR):
            if self.length_cm is None:
                raise ConfigurationError(f"{self.regime.value} regime requires a length")
            if not self.length_cm > 0:
                raise DomainError("length must be > 0")
        if self.regime is FlowKind.VISCOUS and self.mean_pressure_torr is None:
            raise ConfigurationError("viscous regime requires mean_pressure_torr")
        if self.mean_pressure_torr is not None and not self.mean_pressure_torr > 0:
            raise DomainError("mean pressure must be > 0")
        if self.area_cm2 is not None and not self.area_cm2 > 0:
            raise DomainError("area must be > 0")


def pipe_conductance(spec: PipeSpec, gas: GasParams = AIR) -> float:
    """Tube conductance in liters/second for the practical long-tube formulas.

    viscous:   180 * D^4 / L * P   (D, L in cm, P in Torr)
    molecular:  12 * D^3 / L
    aperture:  (v_bar / 4) * A     (A in cm^2, air at room temperature default)
    """
    d = spec.diameter_cm
    if spec.regime is FlowKind.VISCOUS:
        return 180.0 * d ** 4 / spec.length_cm * spec.mean_pressure_torr
    if spec.regime is FlowKind.MOLECULAR:
        return 12.0 * d ** 3 / spec.length_cm
    area_cm2 = spec.area_cm2 if spec.area_cm2 is not None else math.pi * d ** 2 / 4.0
    v_bar = kinetic_speeds(gas).mean  # m/s
    # (v/4)[m/s] * A[m^2] = m^3/s; x1000 -> L/s; cm^2 -> m^2 is x1e-4
    return v_bar / 4.0 * area_cm2 * 1e-4 * 1000.0


def combine_conductance(values: Sequence[float] | Iterable[float], mode: str) -> float:
    """Compose conductances: series is the reciprocal sum, parallel the plain sum."""
    vals = list(values)
    if not vals:
        raise DomainError("conductance list must be non-empty")
    if any(not v > 0 for v in vals):
        raise DomainError("all conductances must be > 0")
    if mode == "series":
        return 1.0 / sum(1.0 / v for v in vals)
    if mode == "parallel":
        return sum(vals)
    raise ConfigurationError(f"mode must be 'series' or 'parallel', got {mode!r}")


# --- pump-down ---------------------------------------------------------------

@dataclass(frozen=True)
class PumpdownParams:
    """Exponential pump-down from p1 toward the pump inlet pressure p2.

    The time constant is exponent_factor * V / C; the factor is configurable
    because the textbook exponent carries an extra constant of unclear units.
    """

    initial_pressure: float
    pump_inlet_pressure: float
    conductance_l_per_s: float
    volume_l: float
    exponent_factor: float = 1.0

    def __post_init__(self):
        if not self.volume_l > 0:
            raise DomainError("volume must be > 0")
        if not self.conductance_l_per_s > 0:
            raise DomainError("conductance must be > 0")
        if self.pump_inlet_pressure < 0:
            raise DomainError("pump inlet pressure must be >= 0")
        if self.initial_pressure < self.pump_inlet_pressure:
            raise DomainError("initial pressure must be >= pump inlet pressure")
        if not self.exponent_factor > 0:
            raise DomainError("exponent_factor must be > 0")


def pumpdown_pressure(params: PumpdownParams, t: float) -> float:
    """Chamber pressure after t seconds: p2 + (p1 - p2) * exp(-C t / (f V))."""
    if t < 0:
        raise DomainError("time must be >= 0")
    tau = params.exponent_factor * params.volume_l / params.conductance_l_per_s
    p1, p2 = params.initial_pressure, params.pump_inlet_pressure
    return p2 + (p1 - p2) * math.exp(-t / tau)
