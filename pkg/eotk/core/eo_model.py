"""Electro-optic transduction model.

Tuning rate, vacuum coupling rate, intracavity photon number, cooperativity and
conversion efficiency, plus the pump-power / RF-power / detuning scans built on them.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from eotk.core.quantities import (
    CONSTANTS,
    TWO_PI,
    DeviceParams,
    MicrowaveMode,
    OpticalMode,
    SuperconductorParams,
    aluminum_film,
)
from eotk.core.superconductor import resonator_response
from eotk.exceptions import DegenerateInputError, DomainError, InputError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)


# ============== Domain Types ==============


class PolymerParams(BaseModel):
    """EO polymer cladding. `field_per_volt` defaults to screening_factor / electrode_gap."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    r33_film: float = Field(105e-12, gt=0, description="thin-film Pockels coefficient, m/V")
    poling_efficiency: float = Field(0.4, ge=0, le=1)
    n_e: float = Field(1.70, gt=0)
    n_o: float = Field(1.68, gt=0)
    mode_energy_fraction: float = Field(0.35, ge=0, le=1)
    electrode_gap: float = Field(2.7e-6, gt=0, description="m")
    screening_factor: float = Field(0.8, gt=0, le=1)
    field_per_volt: float | None = Field(None, description="E_RF,3 / V_applied at the waveguide, 1/m")

    @model_validator(mode="after")
    def _field(self)->"PolymerParams":
        if self.field_per_volt is None:
            object.__setattr__(self, "field_per_volt", self.screening_factor/self.electrode_gap)
        elif not self.field_per_volt>0:
            raise ValueError("field_per_volt must be positive")
        return self

    @property
    def r33_eff(self)->float:
        return self.poling_efficiency*self.r33_film


@dataclass(frozen=True)
class FieldGrid:
    """Sampled optical mode on a rectangular grid.

    `E` has shape (3, nx, ny); `eps` and `delta_eps` are either scalar per cell (nx, ny)
    or full tensors (3, 3, nx, ny); `polymer` is a boolean (nx, ny) mask.
    """

    dx: float
    dy: float
    E: np.ndarray
    eps: np.ndarray
    delta_eps: np.ndarray
    polymer: np.ndarray

    def __post_init__(self)->None:
        if self.E.ndim!=3 or self.E.shape[0]!=3:
            raise InputError(f"E must have shape (3, nx, ny), got {self.E.shape}")
        cells=self.E.shape[1:]
        for name in ("eps", "delta_eps"):
            shape=getattr(self, name).shape
            if shape not in (cells, (3, 3, *cells)):
                raise InputError(f"{name} shape {shape} does not match the grid {cells}")
        if self.polymer.shape!=cells:
            raise InputError(f"polymer mask shape {self.polymer.shape} does not match the grid {cells}")
        outside=~self.polymer.astype(bool)
        if np.any(self.delta_eps[..., outside]!=0):
            raise InputError("delta_eps must vanish outside the polymer region")
        if not (self.dx>0 and self.dy>0):
            raise InputError("grid spacing must be positive")


class PumpConfig(BaseModel):
    model_config=ConfigDict(frozen=True, extra="forbid")

    power_at_cavity_input: float = Field(..., ge=0, description="W")
    detuning: float = Field(0.0, description="pump minus cavity frequency, rad/s")


class ConversionResult(BaseModel):
    """Steady-state conversion figures; uncertainties are linearized from declared inputs."""

    model_config=ConfigDict(frozen=True)

    n_cav: float = Field(..., ge=0)
    cooperativity: float = Field(..., ge=0)
    efficiency: float = Field(..., ge=0, le=1)
    bandwidth_fwhm: float = Field(..., description="Hz")
    sideband_ratio_db: float
    g0: float = Field(..., description="rad/s")
    efficiency_uncertainty: float = 0.0
    g0_uncertainty: float = 0.0


# ============== Tuning and Coupling ==============


def _energy_density(E: np.ndarray, eps: np.ndarray)->np.ndarray:
    if eps.ndim==E.ndim+1:
        weighted=np.einsum("ij...,j...->i...", eps, E)
    else:
        weighted=eps*E
    return np.real(np.sum(np.conj(E)*weighted, axis=0))


def tuning_rate_from_fields(grid: FieldGrid, v_applied: float, omega_opt: float)->float:
    """First-order perturbation estimate of g_V (rad/s per V) by midpoint quadrature.

    Raises:
        DomainError: zero applied voltage
        DegenerateInputError: the field carries no energy
    """
    if v_applied==0:
        raise DomainError("v_applied must be nonzero")
    cell=grid.dx*grid.dy
    denominator=float(np.sum(_energy_density(grid.E, grid.eps)))*cell
    if denominator==0:
        raise DegenerateInputError("optical field has zero stored energy")
    numerator=float(np.sum(_energy_density(grid.E, grid.delta_eps)[grid.polymer.astype(bool)]))*cell
    return -omega_opt/(2.0*v_applied)*numerator/denominator


def tuning_rate_approx(p: PolymerParams, omega_opt: float)->float:
    """Compact g_V = 1/2 omega n_e^2 r33_eff (E/V) (U_polymer/U_total)."""
    return 0.5*omega_opt*p.n_e**2*p.r33_eff*p.field_per_volt*p.mode_energy_fraction


def gv_from_wavelength_tuning(tuning: float, wavelength: float)->float:
    """g_V (rad/s per V) from a resonance-wavelength tuning rate in m/V."""
    if not wavelength>0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    return TWO_PI*CONSTANTS.c*tuning/wavelength**2


def zero_point_voltage(omega_mw: float, z: float)->float:
    if not z>0:
        raise DomainError(f"impedance must be positive, got {z}")
    return omega_mw*math.sqrt(CONSTANTS.hbar*z/2.0)


def coupling_g0(g_v: float, v_zpf: float)->float:
    return g_v*v_zpf


def predicted_g0(tuning: float, wavelength: float, dev: DeviceParams)->float:
    """g0 from a measured wavelength tuning rate and the device's microwave impedance."""
    return coupling_g0(
        gv_from_wavelength_tuning(tuning, wavelength),
        zero_point_voltage(dev.microwave.omega_mw, dev.impedance),
    )


# ============== Cavity Response ==============


def cavity_weight(o: OpticalMode, detuning: float)->float:
    """Lorentzian filter weight (kappa/2)^2 / ((kappa/2)^2 + detuning^2)."""
    half=0.5*o.kappa_tot
    return half*half/(half*half+detuning*detuning)


def intracavity_photons(pump: PumpConfig, o: OpticalMode)->float:
    """n_cav = kappa_e (P / hbar omega) / ((kappa/2)^2 + Delta^2)."""
    flux=pump.power_at_cavity_input/(CONSTANTS.hbar*o.omega_opt)
    half=0.5*o.kappa_tot
    return o.kappa_e*flux/(half*half+pump.detuning**2)


def _require_g0(dev: DeviceParams)->float:
    if dev.g0 is None:
        raise DomainError("device g0 is not set; derive it with predicted_g0 or infer_g0 first")
    return dev.g0


def sideband_ratio(o: OpticalMode, omega_mw: float, pump_detuning: float)->float:
    """Anti-Stokes over Stokes cavity filter weight, in dB."""
    half_sq=(0.5*o.kappa_tot)**2
    ratio=(half_sq+(pump_detuning-omega_mw)**2)/(half_sq+(pump_detuning+omega_mw)**2)
    return 10.0*math.log10(ratio)


def conversion_efficiency(
    dev: DeviceParams,
    n_cav: float,
    n_cav_uncertainty: float = 0.0,
    pump_detuning: float | None = None,
)->ConversionResult:
    """Cooperativity and efficiency for the device at intracavity photon number `n_cav`.

    Args:
        dev: Device with g0 set
        n_cav: Mean intracavity pump photon number
        n_cav_uncertainty: Declared 1-sigma of n_cav
        pump_detuning: Used for the sideband ratio only; defaults to -omega_MW
    """
    if n_cav<0:
        raise DomainError(f"n_cav must be >= 0, got {n_cav}")
    g0=_require_g0(dev)
    o, m=dev.optical, dev.microwave
    cooperativity=4.0*g0*g0*n_cav/(o.kappa_tot*m.gamma_tot)
    extraction=(o.kappa_e/o.kappa_tot)*(m.gamma_e/m.gamma_tot)
    efficiency=extraction*4.0*cooperativity/(1.0+cooperativity)**2

    # d eta / d C, then C's relative sensitivities: 2 to g0, 1 to n_cav
    slope=extraction*4.0*(1.0-cooperativity)/(1.0+cooperativity)**3
    sigma_c=0.0
    if cooperativity>0:
        rel_g0=2.0*dev.g0_uncertainty/g0 if g0>0 else 0.0
        rel_n=n_cav_uncertainty/n_cav if n_cav>0 else 0.0
        sigma_c=cooperativity*math.hypot(rel_g0, rel_n)
    detuning=-m.omega_mw if pump_detuning is None else pump_detuning
    return ConversionResult(
        n_cav=n_cav,
        cooperativity=cooperativity,
        efficiency=efficiency,
        bandwidth_fwhm=m.gamma_tot/TWO_PI,
        sideband_ratio_db=sideband_ratio(o, m.omega_mw, detuning),
        g0=g0,
        efficiency_uncertainty=abs(slope)*sigma_c,
        g0_uncertainty=dev.g0_uncertainty,
    )


def infer_g0(eta: float, dev: DeviceParams, n_cav: float)->float:
    """Low-cooperativity inversion g0 = (kappa gamma / 4 sqrt(n)) sqrt(eta / (kappa_e gamma_e)).

    Raises:
        DegenerateInputError: n_cav = 0
    """
    if eta<0:
        raise DomainError(f"efficiency must be >= 0, got {eta}")
    if n_cav<=0:
        raise DegenerateInputError("infer_g0 needs a positive intracavity photon number")
    o, m=dev.optical, dev.microwave
    return o.kappa_tot*m.gamma_tot/(4.0*math.sqrt(n_cav))*math.sqrt(eta/(o.kappa_e*m.gamma_e))


def operating_point_photons(dev: DeviceParams, pump_dbm: float, input_loss_db: float = 0.0, detuning: float | None = None)->float:
    """n_cav for a pump level quoted before an input chain with `input_loss_db` of loss."""
    if input_loss_db<0:
        raise DomainError(f"input loss must be >= 0 dB, got {input_loss_db}")
    power=1e-3*10.0**((pump_dbm-input_loss_db)/10.0)
    detuning=-dev.microwave.omega_mw if detuning is None else detuning
    return intracavity_photons(PumpConfig(power_at_cavity_input=power, detuning=detuning), dev.optical)


# ============== Scans ==============


@dataclass(frozen=True)
class DetuningCurve:
    delta: np.ndarray
    efficiency: np.ndarray
    peak_efficiency: float
    fwhm: float


def efficiency_vs_rf_detuning(dev: DeviceParams, n_cav: float, delta_rf: np.ndarray)->DetuningCurve:
    """Lorentzian efficiency vs RF drive detuning (rad/s); FWHM = gamma_tot."""
    delta=np.asarray(delta_rf, dtype=float)
    if delta.size==0:
        raise InputError("detuning grid is empty")
    peak=conversion_efficiency(dev, n_cav).efficiency
    half=0.5*dev.microwave.gamma_tot
    return DetuningCurve(
        delta=delta,
        efficiency=peak*half*half/(half*half+delta*delta),
        peak_efficiency=peak,
        fwhm=dev.microwave.gamma_tot,
    )


@dataclass(frozen=True)
class WavelengthRow:
    wavelength: float
    detuning: float
    n_cav: float
    anti_stokes_efficiency: float
    stokes_efficiency: float
    sideband_ratio_db: float


def pump_wavelength_scan(dev: DeviceParams, power_at_cavity_input: float, wavelengths: np.ndarray)->list[WavelengthRow]:
    """Sideband efficiencies and selectivity while the pump wavelength is stepped across the resonance."""
    grid=np.asarray(wavelengths, dtype=float)
    if grid.size==0:
        raise InputError("wavelength grid is empty")
    if np.any(grid<=0):
        raise DomainError("wavelengths must be positive")
    o, m=dev.optical, dev.microwave
    rows=[]
    for wavelength in grid:
        detuning=TWO_PI*CONSTANTS.c/wavelength-o.omega_opt
        n_cav=intracavity_photons(PumpConfig(power_at_cavity_input=power_at_cavity_input, detuning=detuning), o)
        resonant=conversion_efficiency(dev, n_cav, pump_detuning=detuning)
        rows.append(
            WavelengthRow(
                wavelength=float(wavelength),
                detuning=detuning,
                n_cav=n_cav,
                anti_stokes_efficiency=resonant.efficiency*cavity_weight(o, detuning+m.omega_mw),
                stokes_efficiency=resonant.efficiency*cavity_weight(o, detuning-m.omega_mw),
                sideband_ratio_db=resonant.sideband_ratio_db,
            )
        )
    return rows


class StrayLightModel(BaseModel):
    """Quasiparticle heating of the microwave resonator by absorbed pump or microwave power.

    Heating law: T_qp^p = T_bath^p + P_abs / heating_coefficient. The added intrinsic loss is
    omega_MW / Q_qp(T_qp) from the Mattis-Bardeen resonator response.
    """

    model_config=ConfigDict(frozen=True, extra="forbid")

    enabled: bool = True
    absorbed_fraction: float = Field(0.01, ge=0, le=1)
    bath_temperature: float = Field(0.02, gt=0, description="K")
    heating_coefficient: float = Field(2.44e-7, gt=0, description="W / K^p for optical absorption")
    rf_heating_coefficient: float = Field(2.5e-5, gt=0, description="W / K^p for dissipated microwave power")
    heating_exponent: float = Field(4.0, gt=0)
    alpha_k: float = Field(0.05, gt=0, lt=1)
    film: SuperconductorParams = Field(default_factory=aluminum_film)

    def temperature(self, absorbed_power: float, coefficient: float | None = None)->float:
        p=self.heating_exponent
        k=self.heating_coefficient if coefficient is None else coefficient
        return (self.bath_temperature**p+absorbed_power/k)**(1.0/p)

    def added_loss(self, microwave: MicrowaveMode, temperature: float)->float:
        f0=microwave.omega_mw/TWO_PI
        q_qp=resonator_response(self.film, self.alpha_k, f0, temperature).q_qp
        return 0.0 if math.isinf(q_qp) else microwave.omega_mw/q_qp

    def heated_microwave(self, microwave: MicrowaveMode, temperature: float)->MicrowaveMode:
        return microwave.with_intrinsic_loss(microwave.gamma_i+self.added_loss(microwave, temperature))


@dataclass(frozen=True)
class PowerRow:
    power: float
    n_cav: float
    efficiency: float
    gamma_tot: float
    temperature: float | None = None
    extra: dict = field(default_factory=dict)


def efficiency_vs_pump_power(
    dev: DeviceParams,
    powers: np.ndarray,
    stray_light: StrayLightModel | None = None,
    detuning: float | None = None,
)->list[PowerRow]:
    """Efficiency vs pump power at the cavity input (W), with optional stray-light heating."""
    grid=np.asarray(powers, dtype=float)
    if grid.size==0:
        raise InputError("pump power grid is empty")
    detuning=-dev.microwave.omega_mw if detuning is None else detuning
    heating=stray_light is not None and stray_light.enabled
    rows=[]
    for power in grid:
        n_cav=intracavity_photons(PumpConfig(power_at_cavity_input=float(power), detuning=detuning), dev.optical)
        device=dev
        temperature=None
        if heating:
            temperature=stray_light.temperature(stray_light.absorbed_fraction*float(power))
            device=dev.with_microwave(stray_light.heated_microwave(dev.microwave, temperature))
        result=conversion_efficiency(device, n_cav, pump_detuning=detuning)
        rows.append(
            PowerRow(
                power=float(power),
                n_cav=n_cav,
                efficiency=result.efficiency,
                gamma_tot=device.microwave.gamma_tot,
                temperature=temperature,
            )
        )
    logger.debug("pump power scan", points=len(rows), heating=heating)
    return rows


def efficiency_vs_rf_power(
    dev: DeviceParams,
    n_cav: float,
    rf_powers: np.ndarray,
    stray_light: StrayLightModel | None = None,
)->list[PowerRow]:
    """Efficiency vs RF drive power (W) with self-heating by the dissipated fraction 4 gamma_e gamma_i / gamma_tot^2."""
    grid=np.asarray(rf_powers, dtype=float)
    if grid.size==0:
        raise InputError("RF power grid is empty")
    m=dev.microwave
    dissipated_fraction=4.0*m.gamma_e*m.gamma_i/m.gamma_tot**2
    heating=stray_light is not None and stray_light.enabled
    rows=[]
    for power in grid:
        device=dev
        temperature=None
        if heating:
            temperature=stray_light.temperature(dissipated_fraction*float(power), stray_light.rf_heating_coefficient)
            device=dev.with_microwave(stray_light.heated_microwave(m, temperature))
        result=conversion_efficiency(device, n_cav)
        rows.append(
            PowerRow(
                power=float(power),
                n_cav=n_cav,
                efficiency=result.efficiency,
                gamma_tot=device.microwave.gamma_tot,
                temperature=temperature,
                extra={"dissipated_power": dissipated_fraction*float(power)},
            )
        )
    return rows
