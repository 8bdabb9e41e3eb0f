"""Circuit models for the microwave side: CPW quarter-wave resonator, spiral inductor, slot RC network."""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq
from scipy.special import ellipk

from eotk.core.quantities import CONSTANTS, TWO_PI
from eotk.exceptions import DomainError, NumericalError, OutOfRegimeError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

# effective permittivity of a CPW on oxide with polymer cladding (reproduces 63 pF/m)
DEFAULT_CPW_EPS_EFF=3.6

# square-layout coefficients of the current-sheet expression
SQUARE_SPIRAL_COEFFS=(1.27, 2.07, 0.18, 0.13)

REFERENCE_SPIRAL_IMPEDANCE=1200.0


# ============== CPW ==============


class CpwGeometry(BaseModel):
    """Quarter-wave CPW shorted at one end and loaded by `load_capacitance` at the other.

    `L_per_m` / `C_per_m` override the conformal-mapping estimate when given.
    """

    model_config=ConfigDict(frozen=True, extra="forbid")

    center_width: float = Field(5e-6, gt=0, description="m")
    gap: float = Field(13e-6, gt=0, description="m")
    length: float = Field(5200e-6, gt=0, description="m")
    film_thickness: float = Field(100e-9, gt=0, description="m")
    eps_eff: float = Field(DEFAULT_CPW_EPS_EFF, gt=0)
    L_per_m: float | None = Field(None, description="geometric inductance per length, H/m")
    C_per_m: float | None = Field(None, description="capacitance per length, F/m")
    load_capacitance: float = Field(0.0, ge=0, description="F")
    sheet_inductance: float = Field(140e-15, ge=0, description="film Ls, H/sq")

    @model_validator(mode="after")
    def _positive_overrides(self)->"CpwGeometry":
        for name in ("L_per_m", "C_per_m"):
            value=getattr(self, name)
            if value is not None and not value>0:
                raise ValueError(f"{name} must be positive")
        return self


@dataclass(frozen=True)
class LineParams:
    L_per_m: float
    C_per_m: float
    Z0: float

    @property
    def phase_velocity(self)->float:
        return 1.0/math.sqrt(self.L_per_m*self.C_per_m)


def _modulus(geometry: CpwGeometry)->float:
    return geometry.center_width/(geometry.center_width+2.0*geometry.gap)


def cpw_line_params(geometry: CpwGeometry, substrate_eps_eff: float | None = None)->LineParams:
    """Conformal-mapping L', C' and Z0 (explicit L_per_m / C_per_m take precedence).

    Args:
        geometry: CPW layout
        substrate_eps_eff: Effective permittivity; defaults to `geometry.eps_eff`
    """
    eps_eff=geometry.eps_eff if substrate_eps_eff is None else substrate_eps_eff
    if not eps_eff>0:
        raise DomainError(f"effective permittivity must be positive, got {eps_eff}")
    k=_modulus(geometry)
    # scipy's ellipk takes the parameter m = k^2
    ratio=ellipk(k*k)/ellipk(1.0-k*k)
    inductance=geometry.L_per_m if geometry.L_per_m is not None else CONSTANTS.mu0/(4.0*ratio)
    capacitance=geometry.C_per_m if geometry.C_per_m is not None else 4.0*CONSTANTS.eps0*eps_eff*ratio
    return LineParams(L_per_m=inductance, C_per_m=capacitance, Z0=math.sqrt(inductance/capacitance))


def cpw_geometry_factors(geometry: CpwGeometry)->tuple[float, float]:
    """Thin-film kinetic-inductance factors (g_c, g_g) in 1/m for the center strip and ground planes."""
    s=geometry.center_width
    t=geometry.film_thickness
    k=_modulus(geometry)
    kk=float(ellipk(k*k))
    denominator=4.0*s*(1.0-k*k)*kk*kk
    log_ratio=math.log((1.0+k)/(1.0-k))
    g_c=(math.pi+math.log(4.0*math.pi*s/t)-k*log_ratio)/denominator
    g_g=k*(math.pi+math.log(4.0*math.pi*(s+2.0*geometry.gap)/t)-log_ratio/k)/denominator
    return g_c, g_g


def cpw_kinetic_fraction(geometry: CpwGeometry, sheet_inductance: float | None = None)->float:
    """alpha_k = (g_c + g_g) Ls / (L_geom' + (g_c + g_g) Ls)."""
    ls=geometry.sheet_inductance if sheet_inductance is None else sheet_inductance
    if ls<0:
        raise DomainError(f"sheet inductance must be >= 0, got {ls}")
    g_c, g_g=cpw_geometry_factors(geometry)
    kinetic=(g_c+g_g)*ls
    return kinetic/(cpw_line_params(geometry).L_per_m+kinetic)


def loaded_quarterwave_frequency(geometry: CpwGeometry, alpha_k: float = 0.0)->float:
    """Lowest resonance of the shorted line terminated by `geometry.load_capacitance`.

    Solves Z0 tan(beta l) = 1 / (omega C_load), i.e. x tan x = C' l / C_load with x = beta l,
    using the kinetic-inductance-corrected phase velocity.

    Raises:
        NumericalError: no root in (0, pi/2)
    """
    if not 0<=alpha_k<1:
        raise DomainError(f"alpha_k must lie in [0, 1), got {alpha_k}")
    line=cpw_line_params(geometry)
    velocity=1.0/math.sqrt(line.L_per_m/(1.0-alpha_k)*line.C_per_m)
    quarter_wave=velocity/(4.0*geometry.length)
    if geometry.load_capacitance==0:
        return quarter_wave
    loading=line.C_per_m*geometry.length/geometry.load_capacitance
    try:
        x=brentq(lambda x: x*math.sin(x)-loading*math.cos(x), 0.0, 0.5*math.pi, xtol=1e-15, rtol=4.0*np.finfo(float).eps)
    except ValueError as exc:
        raise NumericalError("loaded quarter-wave condition has no root", {"loading": loading}) from exc
    return x*velocity/(TWO_PI*geometry.length)


def cpw_impedance(geometry: CpwGeometry, alpha_k: float = 0.0)->float:
    line=cpw_line_params(geometry)
    return math.sqrt(line.L_per_m/(1.0-alpha_k)/line.C_per_m)


# ============== Spiral Inductor ==============


class SpiralGeometry(BaseModel):
    """Square planar spiral; `fill_factor` is wire width over pitch."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    n_turns: int = Field(27, ge=1)
    outer_diameter: float = Field(100e-6, gt=0, description="m")
    wire_pitch: float = Field(1e-6, gt=0, description="m")
    fill_factor: float = Field(0.25, gt=0, lt=1)
    cladding_permittivity: float = Field(1.0, ge=1.0)
    substrate_permittivity: float = Field(11.7, ge=1.0)
    wire_thickness: float = Field(100e-9, gt=0, description="m")

    @model_validator(mode="after")
    def _inner_diameter(self)->"SpiralGeometry":
        if self.inner_diameter<0:
            raise ValueError(
                f"{self.n_turns} turns at {self.wire_pitch*1e6:g} um pitch do not fit in "
                f"{self.outer_diameter*1e6:g} um"
            )
        return self

    @property
    def wire_width(self)->float:
        return self.fill_factor*self.wire_pitch

    @property
    def spacing(self)->float:
        return self.wire_pitch-self.wire_width

    @property
    def inner_diameter(self)->float:
        return self.outer_diameter-2.0*(self.n_turns*self.wire_width+(self.n_turns-1)*self.spacing)

    @property
    def eps_eff(self)->float:
        return 0.5*(self.substrate_permittivity+self.cladding_permittivity)

    @property
    def area(self)->float:
        return self.outer_diameter**2


@dataclass(frozen=True)
class SpiralResonance:
    inductance: float
    self_capacitance: float
    srf: float
    impedance: float


def spiral_inductance(geometry: SpiralGeometry)->float:
    """Current-sheet inductance of a square spiral, in H.

    Raises:
        DomainError: fill ratio (d_out - d_in)/(d_out + d_in) outside (0, 1)
    """
    c1, c2, c3, c4=SQUARE_SPIRAL_COEFFS
    d_out=geometry.outer_diameter
    d_in=geometry.inner_diameter
    phi=(d_out-d_in)/(d_out+d_in)
    if not 0<phi<1:
        raise DomainError(f"spiral fill ratio {phi:.4g} outside (0, 1)")
    d_avg=0.5*(d_out+d_in)
    n=geometry.n_turns
    return CONSTANTS.mu0*n*n*d_avg*c1/2.0*(math.log(c2/phi)+c3*phi+c4*phi*phi)


def _parallel_mutual(a1: np.ndarray, a2: np.ndarray, b1: np.ndarray, b2: np.ndarray, distance: np.ndarray)->np.ndarray:
    def g(u: np.ndarray)->np.ndarray:
        return u*np.arcsinh(u/distance)-np.sqrt(u*u+distance*distance)

    return CONSTANTS.mu0/(4.0*math.pi)*(g(a2-b1)-g(a2-b2)-g(a1-b1)+g(a1-b2))


def greenhouse_inductance(geometry: SpiralGeometry)->float:
    """Segment-sum reference inductance of the spiral modeled as concentric square loops.

    Self inductance of each straight bar plus signed mutual inductance between all
    parallel bars (same side adds, opposite side subtracts); perpendicular bars do not couple.
    """
    w=geometry.wire_width
    t=geometry.wire_thickness
    sides=geometry.outer_diameter-w-2.0*geometry.wire_pitch*np.arange(geometry.n_turns)
    if np.any(sides<=0):
        raise DomainError("spiral turns collapse below zero side length")

    self_terms=CONSTANTS.mu0/(2.0*math.pi)*sides*(np.log(2.0*sides/(w+t))+0.50049+(w+t)/(3.0*sides))

    li=sides[:, None]
    lj=sides[None, :]
    half_i, half_j=0.5*li, 0.5*lj
    same_distance=np.abs(half_i-half_j)
    off_diagonal=~np.eye(geometry.n_turns, dtype=bool)
    same=_parallel_mutual(-half_i, half_i, -half_j, half_j, np.where(off_diagonal, same_distance, 1.0))
    opposite=_parallel_mutual(-half_i, half_i, -half_j, half_j, half_i+half_j)

    total=4.0*self_terms.sum()+4.0*same[off_diagonal].sum()-4.0*opposite.sum()
    return float(total)


def _self_capacitance(geometry: SpiralGeometry)->float:
    return spiral_area_coefficient()*geometry.eps_eff*geometry.area


@lru_cache(maxsize=1)
def spiral_area_coefficient()->float:
    """Per-area self-capacitance coefficient k_area (F/m^2), calibrated once on the 27-turn 1.2 kOhm spiral."""
    reference=SpiralGeometry()
    inductance=spiral_inductance(reference)
    capacitance=inductance/REFERENCE_SPIRAL_IMPEDANCE**2
    coefficient=capacitance/(reference.eps_eff*reference.area)
    logger.debug("spiral self-capacitance calibrated", k_area=coefficient, inductance=inductance)
    return coefficient


def spiral_resonance(geometry: SpiralGeometry)->SpiralResonance:
    """Self-capacitance, self-resonant frequency (Hz) and characteristic impedance of a spiral."""
    inductance=spiral_inductance(geometry)
    capacitance=_self_capacitance(geometry)
    return SpiralResonance(
        inductance=inductance,
        self_capacitance=capacitance,
        srf=1.0/(TWO_PI*math.sqrt(inductance*capacitance)),
        impedance=math.sqrt(inductance/capacitance),
    )


def impedance_at_srf(
    n_turns: int,
    wire_pitch: float,
    target_srf: float,
    fill_factor: float = 0.25,
    cladding_permittivity: float = 1.0,
    substrate_permittivity: float = 11.7,
)->tuple[SpiralGeometry, SpiralResonance]:
    """Size the outer diameter so the spiral self-resonates at `target_srf`.

    Raises:
        OutOfRegimeError: the winding is too large to reach the target even at zero inner diameter
    """

    def build(d_out: float)->SpiralGeometry:
        return SpiralGeometry(
            n_turns=n_turns,
            outer_diameter=d_out,
            wire_pitch=wire_pitch,
            fill_factor=fill_factor,
            cladding_permittivity=cladding_permittivity,
            substrate_permittivity=substrate_permittivity,
        )

    width=fill_factor*wire_pitch
    winding=2.0*(n_turns*width+(n_turns-1)*(wire_pitch-width))
    d_min=winding*(1.0+1e-6)
    d_max=max(1e-2, 10.0*d_min)
    srf_max=spiral_resonance(build(d_min)).srf
    if srf_max<target_srf:
        raise OutOfRegimeError(
            f"{n_turns} turns at {wire_pitch*1e6:g} um pitch cannot reach SRF {target_srf/1e9:.3g} GHz "
            f"(maximum {srf_max/1e9:.3g} GHz)",
            {"n_turns": n_turns, "wire_pitch": wire_pitch, "srf_max": srf_max},
        )
    d_out=brentq(lambda d: spiral_resonance(build(d)).srf-target_srf, d_min, d_max, xtol=1e-15, rtol=1e-12)
    geometry=build(d_out)
    return geometry, spiral_resonance(geometry)


# ============== Slot Waveguide Circuit ==============


class SlotCircuit(BaseModel):
    """Electrode capacitance in parallel with the slab resistance in series with the slot capacitance."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    slot_capacitance: float = Field(..., gt=0, description="F")
    resistance_per_resistivity: float = Field(..., gt=0, description="R / rho, 1/m")
    electrode_capacitance: float = Field(..., gt=0, description="F")
    analysis_frequency: float = Field(6.672e9, gt=0, description="Hz")

    def slab_resistance(self, rho: float)->float:
        return rho*self.resistance_per_resistivity


@dataclass(frozen=True)
class SlotResponse:
    q_mw: float
    f_3db: float
    voltage_fraction: float
    impedance: complex


def slot_circuit_analysis(c: SlotCircuit, rho: float, frequency: float | None = None)->SlotResponse:
    """Microwave Q, RC roll-off and slot voltage fraction for slab resistivity `rho` (Ohm m)."""
    if rho<0:
        raise DomainError(f"resistivity must be >= 0, got {rho}")
    omega=TWO_PI*(c.analysis_frequency if frequency is None else frequency)
    resistance=c.slab_resistance(rho)
    x=omega*resistance*c.slot_capacitance
    admittance=1j*omega*c.electrode_capacitance+1j*omega*c.slot_capacitance/(1.0+1j*x)
    impedance=1.0/admittance
    q_mw=math.inf if admittance.real==0 else abs(admittance.imag)/abs(admittance.real)
    f_3db=math.inf if resistance==0 else 1.0/(TWO_PI*resistance*c.slot_capacitance)
    return SlotResponse(q_mw=q_mw, f_3db=f_3db, voltage_fraction=1.0/math.sqrt(1.0+x*x), impedance=complex(impedance))


def slot_circuit_from_geometry(
    slab_path_length: float,
    slab_cross_section: float,
    slot_width: float,
    slot_height: float,
    slot_length: float,
    slot_permittivity: float,
    electrode_capacitance: float,
    arms: int = 2,
    analysis_frequency: float = 6.672e9,
)->SlotCircuit:
    """Build a SlotCircuit from slab and slot dimensions.

    The slab conducts through `arms` identical paths in series (one on each side of the slot);
    the slot is a parallel-plate capacitor filled with the EO polymer.
    """
    for name, value in (
        ("slab_path_length", slab_path_length),
        ("slab_cross_section", slab_cross_section),
        ("slot_width", slot_width),
        ("slot_height", slot_height),
        ("slot_length", slot_length),
        ("slot_permittivity", slot_permittivity),
    ):
        if not value>0:
            raise DomainError(f"{name} must be positive, got {value}")
    return SlotCircuit(
        slot_capacitance=CONSTANTS.eps0*slot_permittivity*slot_height*slot_length/slot_width,
        resistance_per_resistivity=arms*slab_path_length/slab_cross_section,
        electrode_capacitance=electrode_capacitance,
        analysis_frequency=analysis_frequency,
    )


def strip_loaded_slot()->SlotCircuit:
    """Strip-loaded slot waveguide: 1.5 um lateral slab path, 100 nm x 100 um slab, 150 nm slot."""
    return slot_circuit_from_geometry(
        slab_path_length=1.5e-6,
        slab_cross_section=100e-9*100e-6,
        slot_width=150e-9,
        slot_height=220e-9,
        slot_length=100e-6,
        slot_permittivity=3.0,
        electrode_capacitance=10e-15,
    )


def etched_test_device()->SlotCircuit:
    """Fully etched slotted test device contacted along 100 um of 220 nm x 60 nm silicon."""
    return slot_circuit_from_geometry(
        slab_path_length=100e-6,
        slab_cross_section=220e-9*60e-9,
        slot_width=180e-9,
        slot_height=220e-9,
        slot_length=100e-6,
        slot_permittivity=3.0,
        electrode_capacitance=10e-15,
    )


class AbsorptionTable(BaseModel):
    """User-supplied resistivity (Ohm m) to absorption coefficient (1/m) table."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    resistivity: list[float] = Field(..., min_length=2)
    absorption: list[float] = Field(..., min_length=2)

    @model_validator(mode="after")
    def _shape(self)->"AbsorptionTable":
        if len(self.resistivity)!=len(self.absorption):
            raise ValueError("resistivity and absorption columns differ in length")
        if any(r<=0 for r in self.resistivity) or any(a<=0 for a in self.absorption):
            raise ValueError("table entries must be positive for log-log interpolation")
        if any(b<=a for a, b in zip(self.resistivity, self.resistivity[1:])):
            raise ValueError("resistivity column must be strictly increasing")
        return self


def optical_q_from_absorption(
    table: AbsorptionTable,
    rho: float,
    wavelength: float = 1557.92e-9,
    group_index: float = 4.0,
    silicon_fraction: float = 0.65,
)->float:
    """Absorption-limited optical Q = 2 pi n_g / (lambda * fraction * alpha(rho)), log-log interpolated."""
    if not rho>0:
        raise DomainError(f"resistivity must be positive, got {rho}")
    log_alpha=np.interp(math.log(rho), np.log(table.resistivity), np.log(table.absorption))
    alpha=math.exp(float(log_alpha))
    return TWO_PI*group_index/(wavelength*silicon_fraction*alpha)
