"""Physical constants, unit-tagged quantities and the parameter records shared by all core modules.

Conventions:
    - every rate stored on a record is angular (rad/s); ordinary frequencies (Hz)
      appear only at the boundaries (RunConfig, CSV/JSON output) and are converted
      with an explicit factor of 2*pi
    - quasiparticle densities are per cubic micron, so N0 is stored per joule per um^3
    - records are frozen pydantic models: safe to share between threads
"""

import math
from typing import Annotated, Any, Literal, NamedTuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator
from scipy import constants as sc

from eotk.exceptions import DomainError

TWO_PI=2.0*math.pi

# Relative tolerance of the rate-composition rules (inputs are exact decimals)
RATE_COMPOSITION_RTOL=1e-9

# Delta0 must sit within this fraction of the weak-coupling value 1.764 kB Tc
BCS_RATIO=1.764
BCS_TOLERANCE=0.02


class PhysicalConstants(BaseModel):
    """CODATA constants used throughout the toolkit (SI units)."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    hbar: float = Field(sc.hbar, description="J s")
    kB: float = Field(sc.k, description="J/K")
    c: float = Field(sc.c, description="m/s")
    mu0: float = Field(sc.mu_0, description="H/m")
    eps0: float = Field(sc.epsilon_0, description="F/m")
    e_charge: float = Field(sc.e, description="C")

    @model_validator(mode="after")
    def _codata_only(self)->"PhysicalConstants":
        for name, reference in _CODATA.items():
            if getattr(self, name)!=reference:
                raise ValueError(f"{name} is fixed to its CODATA value {reference!r}")
        return self


_CODATA={
    "hbar": sc.hbar,
    "kB": sc.k,
    "c": sc.c,
    "mu0": sc.mu_0,
    "eps0": sc.epsilon_0,
    "e_charge": sc.e,
}

CONSTANTS=PhysicalConstants()


# ============== Unit Tags ==============


class Quantity(NamedTuple):
    """A value with an explicit unit tag, e.g. Quantity(6.672, "GHz")."""

    value: float
    unit: str


# unit -> (dimension, factor to the dimension's canonical unit)
_UNITS: dict[str, tuple[str, float]] = {
    # frequency-like; canonical unit rad/s
    "rad/s": ("frequency", 1.0),
    "Hz": ("frequency", TWO_PI),
    "kHz": ("frequency", TWO_PI*1e3),
    "MHz": ("frequency", TWO_PI*1e6),
    "GHz": ("frequency", TWO_PI*1e9),
    "THz": ("frequency", TWO_PI*1e12),
    # power; canonical W (dBm handled separately)
    "W": ("power", 1.0),
    "mW": ("power", 1e-3),
    "uW": ("power", 1e-6),
    "nW": ("power", 1e-9),
    # energy; canonical J
    "J": ("energy", 1.0),
    "eV": ("energy", sc.e),
    "meV": ("energy", sc.e*1e-3),
    "ueV": ("energy", sc.e*1e-6),
    # length; canonical m
    "m": ("length", 1.0),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "pm": ("length", 1e-12),
    # time; canonical s
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
    # everything else used by the records
    "K": ("temperature", 1.0),
    "mK": ("temperature", 1e-3),
    "Ohm": ("impedance", 1.0),
    "kOhm": ("impedance", 1e3),
    "S/m": ("conductivity", 1.0),
    "H/sq": ("sheet_inductance", 1.0),
    "pH/sq": ("sheet_inductance", 1e-12),
    "fH/sq": ("sheet_inductance", 1e-15),
    "H/m": ("inductance_per_length", 1.0),
    "nH/m": ("inductance_per_length", 1e-9),
    "F/m": ("capacitance_per_length", 1.0),
    "pF/m": ("capacitance_per_length", 1e-12),
    "F": ("capacitance", 1.0),
    "fF": ("capacitance", 1e-15),
    "m/V": ("tuning", 1.0),
    "pm/V": ("tuning", 1e-12),
    "1/(J*um^3)": ("density_of_states", 1.0),
    "1/(eV*um^3)": ("density_of_states", 1.0/sc.e),
    "Ohm*m": ("resistivity", 1.0),
    "Ohm*cm": ("resistivity", 1e-2),
}


def convert(quantity: Quantity, target_unit: str)->float:
    """Convert a tagged quantity to `target_unit`.

    Raises:
        DomainError: unknown unit or incompatible dimensions
    """
    value, unit=quantity
    if unit=="dBm":
        value, unit=dbm_to_watts(value), "W"
    if unit not in _UNITS or target_unit not in _UNITS:
        raise DomainError(f"unknown unit in conversion {unit!r} -> {target_unit!r}")
    source_dim, source_factor=_UNITS[unit]
    target_dim, target_factor=_UNITS[target_unit]
    if source_dim!=target_dim:
        raise DomainError(f"cannot convert {unit} ({source_dim}) to {target_unit} ({target_dim})")
    return float(value)*source_factor/target_factor


def _tagged(canonical_unit: str)->BeforeValidator:
    def _coerce(value: Any)->Any:
        if isinstance(value, Quantity):
            return convert(value, canonical_unit)
        return value
    return BeforeValidator(_coerce)


AngularRate=Annotated[float, _tagged("rad/s")]
Power=Annotated[float, _tagged("W")]
Energy=Annotated[float, _tagged("J")]
Length=Annotated[float, _tagged("m")]
Duration=Annotated[float, _tagged("s")]
Temperature=Annotated[float, _tagged("K")]
Impedance=Annotated[float, _tagged("Ohm")]
Conductivity=Annotated[float, _tagged("S/m")]
SheetInductance=Annotated[float, _tagged("H/sq")]
DensityOfStates=Annotated[float, _tagged("1/(J*um^3)")]

CouplingTopology=Literal["single-sided", "two-sided"]


def composed_rate(intrinsic: float, external: float, topology: CouplingTopology)->float:
    """Total loss rate: intrinsic + external (single-sided) or intrinsic + 2 external (two-sided)."""
    return intrinsic+(2.0 if topology=="two-sided" else 1.0)*external


def _check_composition(label: str, intrinsic: float, external: float, total: float, topology: CouplingTopology)->None:
    expected=composed_rate(intrinsic, external, topology)
    if not math.isclose(total, expected, rel_tol=RATE_COMPOSITION_RTOL):
        raise ValueError(
            f"{label}: total rate {total/TWO_PI:.6g} Hz does not equal the {topology} "
            f"composition {expected/TWO_PI:.6g} Hz"
        )


# ============== Parameter Records ==============


class OpticalMode(BaseModel):
    """Optical resonance (angular rates). `kappa_tot` is derived when omitted."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    omega_opt: AngularRate = Field(..., gt=0, description="rad/s")
    kappa_i: AngularRate = Field(..., gt=0, description="intrinsic loss, rad/s")
    kappa_e: AngularRate = Field(..., gt=0, description="external coupling, rad/s")
    kappa_tot: AngularRate | None = Field(None, description="total loss, rad/s")
    coupling_topology: CouplingTopology = "single-sided"

    @model_validator(mode="after")
    def _compose(self)->"OpticalMode":
        if self.kappa_tot is None:
            # frozen model: the derived field is filled exactly once, here
            object.__setattr__(self, "kappa_tot", composed_rate(self.kappa_i, self.kappa_e, self.coupling_topology))
        _check_composition("optical", self.kappa_i, self.kappa_e, self.kappa_tot, self.coupling_topology)
        if self.kappa_e>self.kappa_tot:
            raise ValueError("optical: kappa_e exceeds kappa_tot")
        return self


class MicrowaveMode(BaseModel):
    """Microwave resonance (angular rates). Two-sided coupling by default."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    omega_mw: AngularRate = Field(..., gt=0, description="rad/s")
    gamma_i: AngularRate = Field(..., gt=0, description="intrinsic loss, rad/s")
    gamma_e: AngularRate = Field(..., gt=0, description="external coupling per port, rad/s")
    gamma_tot: AngularRate | None = Field(None, description="total loss, rad/s")
    coupling_topology: CouplingTopology = "two-sided"

    @model_validator(mode="after")
    def _compose(self)->"MicrowaveMode":
        if self.gamma_tot is None:
            object.__setattr__(self, "gamma_tot", composed_rate(self.gamma_i, self.gamma_e, self.coupling_topology))
        _check_composition("microwave", self.gamma_i, self.gamma_e, self.gamma_tot, self.coupling_topology)
        return self

    def with_intrinsic_loss(self, gamma_i: float)->"MicrowaveMode":
        """Same mode with a different intrinsic loss; the total is recomposed."""
        return MicrowaveMode(
            omega_mw=self.omega_mw,
            gamma_i=gamma_i,
            gamma_e=self.gamma_e,
            coupling_topology=self.coupling_topology,
        )


class DeviceParams(BaseModel):
    """Optical and microwave modes, microwave impedance and the vacuum coupling rate."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    optical: OpticalMode
    microwave: MicrowaveMode
    impedance: Impedance = Field(..., gt=0, description="microwave resonator impedance, Ohm")
    g0: AngularRate | None = Field(None, ge=0, description="vacuum coupling rate, rad/s")
    g0_uncertainty: AngularRate = Field(0.0, ge=0, description="declared 1-sigma of g0, rad/s")

    def with_g0(self, g0: float, uncertainty: float = 0.0)->"DeviceParams":
        return self.model_copy(update={"g0": g0, "g0_uncertainty": uncertainty})

    def with_microwave(self, microwave: MicrowaveMode)->"DeviceParams":
        return self.model_copy(update={"microwave": microwave})


class SuperconductorParams(BaseModel):
    """Film parameters for the Mattis-Bardeen kernels.

    `NV_coupling` (N0 V_sc) is calibrated when omitted so that the gap equation
    returns exactly `Delta0` at zero temperature for the given Debye temperature.
    """

    model_config=ConfigDict(frozen=True, extra="forbid")

    name: str = "film"
    sigma_n: Conductivity = Field(..., gt=0, description="normal-state conductivity, S/m")
    Tc: Temperature = Field(..., gt=0, description="critical temperature, K")
    Delta0: Energy = Field(..., gt=0, description="zero-temperature gap, J")
    N0: DensityOfStates = Field(..., gt=0, description="single-spin density of states, 1/(J um^3)")
    film_thickness: Length = Field(..., gt=0, description="m")
    tau0: Duration = Field(..., gt=0, description="electron-phonon time, s")
    Ls_ref: SheetInductance = Field(..., gt=0, description="reference sheet inductance at T=0, H/sq")
    debye_temperature: Temperature = Field(433.0, gt=0, description="K")
    NV_coupling: float | None = Field(None, description="N0 V_sc, dimensionless")
    tau_qp_max: Duration | None = Field(None, description="observed lifetime saturation, s")

    @model_validator(mode="after")
    def _calibrate(self)->"SuperconductorParams":
        weak_coupling=BCS_RATIO*CONSTANTS.kB*self.Tc
        if abs(self.Delta0/weak_coupling-1.0)>BCS_TOLERANCE:
            raise ValueError(
                f"{self.name}: Delta0 = {self.Delta0/sc.e*1e6:.1f} ueV is not within "
                f"{BCS_TOLERANCE:.0%} of 1.764 kB Tc = {weak_coupling/sc.e*1e6:.1f} ueV"
            )
        debye_energy=CONSTANTS.kB*self.debye_temperature
        if debye_energy<=self.Delta0:
            raise ValueError(f"{self.name}: Debye energy must exceed the gap")
        if self.NV_coupling is None:
            object.__setattr__(self, "NV_coupling", 1.0/math.acosh(debye_energy/self.Delta0))
        elif self.NV_coupling<=0:
            raise ValueError(f"{self.name}: NV_coupling must be positive")
        if self.tau_qp_max is not None and self.tau_qp_max<=0:
            raise ValueError(f"{self.name}: tau_qp_max must be positive")
        return self


# ============== Conversions ==============


def dbm_to_watts(p_dbm: float)->float:
    """Power in watts for a level in dBm (0 dBm = 1 mW)."""
    if not math.isfinite(p_dbm):
        raise DomainError(f"power level must be finite, got {p_dbm}")
    return 1e-3*10.0**(p_dbm/10.0)


def watts_to_dbm(power: float)->float:
    """Level in dBm for a power in watts.

    Raises:
        DomainError: power <= 0 has no logarithmic level
    """
    if not power>0:
        raise DomainError(f"watts_to_dbm needs a positive power, got {power}")
    return 10.0*math.log10(power/1e-3)


def rate_from_q(f0: float, q: float)->float:
    """Angular loss rate 2 pi f0 / Q; an infinite Q is lossless."""
    if not f0>0 or not q>0:
        raise DomainError(f"rate_from_q needs f0 > 0 and q > 0, got f0={f0}, q={q}")
    return TWO_PI*f0/q


def q_from_rate(f0: float, rate: float)->float:
    """Inverse of rate_from_q; a zero rate gives an infinite Q."""
    if not f0>0 or rate<0:
        raise DomainError(f"q_from_rate needs f0 > 0 and rate >= 0, got f0={f0}, rate={rate}")
    if rate==0:
        return math.inf
    return TWO_PI*f0/rate


def photon_flux(power: float, omega: float)->float:
    """Photons per second carried by `power` at angular frequency `omega`."""
    if not omega>0:
        raise DomainError(f"photon_flux needs omega > 0, got {omega}")
    if power<0:
        raise DomainError(f"photon_flux needs power >= 0, got {power}")
    return power/(CONSTANTS.hbar*omega)


def to_hz(rate: float)->float:
    return rate/TWO_PI


def from_hz(frequency: float)->float:
    return frequency*TWO_PI


# ============== Reference Records ==============


def measured_device(g0_hz: float | None = 330.0, g0_uncertainty_hz: float = 60.0)->DeviceParams:
    """Measured device record (rates quoted as omega/2pi)."""
    return DeviceParams(
        optical=OpticalMode(
            omega_opt=Quantity(192.6, "THz"),
            kappa_i=Quantity(2.07, "GHz"),
            kappa_e=Quantity(7.61, "GHz"),
            kappa_tot=Quantity(9.68, "GHz"),
            coupling_topology="single-sided",
        ),
        microwave=MicrowaveMode(
            omega_mw=Quantity(6.672, "GHz"),
            gamma_i=Quantity(2.53, "MHz"),
            gamma_e=Quantity(1.91, "MHz"),
            gamma_tot=Quantity(6.35, "MHz"),
            coupling_topology="two-sided",
        ),
        impedance=100.0,
        g0=None if g0_hz is None else from_hz(g0_hz),
        g0_uncertainty=from_hz(g0_uncertainty_hz),
    )


def aluminum_film()->SuperconductorParams:
    """100 nm evaporated aluminum film."""
    return SuperconductorParams(
        name="Al",
        sigma_n=1.3e8,
        Tc=1.1,
        Delta0=Quantity(167.0, "ueV"),
        N0=Quantity(1.72e10, "1/(eV*um^3)"),
        film_thickness=Quantity(100.0, "nm"),
        tau0=Quantity(458.0, "ns"),
        Ls_ref=Quantity(140.0, "fH/sq"),
        debye_temperature=433.0,
        tau_qp_max=Quantity(3.5, "ms"),
    )
