"""Resonance lineshapes, Fano-Lorentzian fitting and the heterodyne calibration pipeline."""

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import trapezoid
from scipy.optimize import least_squares
from scipy.stats import linregress

from eotk.core.quantities import CONSTANTS, photon_flux
from eotk.exceptions import DomainError, InputError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

SpectrumKind=Literal["optical_reflection", "microwave_s21", "heterodyne_rf"]
CouplingRegime=Literal["over", "under", "auto"]

MIN_FIT_POINTS=20
MIN_FIT_SPAN_LINEWIDTHS=3.0
FIT_TOLERANCE=1e-10
FIT_MAX_NFEV=500

# 1-sigma systematic calibration bound relative to eta (2.2 +- 0.7 e-9)
DEFAULT_SYSTEMATIC_FRACTION=0.32


# ============== Domain Types ==============


@dataclass(frozen=True)
class Spectrum:
    """Frequency-indexed power trace (Hz, W/Hz or normalized power)."""

    frequency: np.ndarray
    psd: np.ndarray
    rbw: float = 0.0
    kind: SpectrumKind = "optical_reflection"

    def __post_init__(self)->None:
        frequency=np.asarray(self.frequency, dtype=float)
        psd=np.asarray(self.psd, dtype=float)
        object.__setattr__(self, "frequency", frequency)
        object.__setattr__(self, "psd", psd)
        if frequency.ndim!=1 or frequency.shape!=psd.shape:
            raise InputError(f"frequency {frequency.shape} and psd {psd.shape} must be matching 1-D arrays")
        if frequency.size and np.any(np.diff(frequency)<=0):
            raise InputError("frequency grid must be strictly increasing")
        if np.any(psd<0):
            raise InputError("power spectral density must be >= 0")
        if self.rbw<0:
            raise InputError("resolution bandwidth must be >= 0")

    def __len__(self)->int:
        return int(self.frequency.size)


class FanoLorentzian(BaseModel):
    """Single-port cavity reflection with Fano asymmetry and a linear background.

    Rates are full widths in Hz. With `external_ports=2` the trace is the S21 of a resonator
    side-coupled to a feedline: each port leaks kappa_e, the total width is kappa_i + 2 kappa_e
    and the on-resonance transmission is kappa_i / kappa_tot.
    """

    model_config=ConfigDict(frozen=True, extra="forbid")

    f0: float = Field(..., description="Hz")
    kappa_i: float = Field(..., gt=0, description="Hz")
    kappa_e: float = Field(..., gt=0, description="Hz")
    fano_phase: float = Field(0.0, description="rad")
    amplitude: float = Field(1.0, ge=0)
    slope: float = Field(0.0, description="per Hz")
    intercept: float = 0.0
    external_ports: Literal[1, 2] = 1

    @property
    def kappa_tot(self)->float:
        return self.kappa_i+self.external_ports*self.kappa_e

    @property
    def q_intrinsic(self)->float:
        return self.f0/self.kappa_i

    @property
    def q_total(self)->float:
        return self.f0/self.kappa_tot


def _reflection(frequency: np.ndarray, f0: float, kappa: float, external: float, phase: float)->np.ndarray:
    """|1 - e^(i phase) external/(kappa/2 + i delta)|^2 with `external` the coupling of one port."""
    delta=frequency-f0
    return np.abs(1.0-np.exp(1j*phase)*external/(0.5*kappa+1j*delta))**2


def _lineshape(frequency: np.ndarray, f0: float, kappa: float, external: float, phase: float, amplitude: float, slope: float, intercept: float)->np.ndarray:
    return intercept+(amplitude+slope*(frequency-f0))*_reflection(frequency, f0, kappa, external, phase)


def eval_lineshape(m: FanoLorentzian, frequency: np.ndarray, kind: SpectrumKind = "optical_reflection")->Spectrum:
    grid=np.asarray(frequency, dtype=float)
    values=_lineshape(grid, m.f0, m.kappa_tot, m.kappa_e, m.fano_phase, m.amplitude, m.slope, m.intercept)
    return Spectrum(frequency=grid, psd=np.clip(values, 0.0, None), kind=kind)


# ============== Fitting ==============


class FanoFit(BaseModel):
    model_config=ConfigDict(frozen=True)

    model: FanoLorentzian
    stderr: dict[str, float]
    residual_norm: float
    nfev: int
    coupling: Literal["over", "under"]
    flags: list[str] = Field(default_factory=list)

    @property
    def ok(self)->bool:
        return not self.flags


@dataclass(frozen=True)
class _Guess:
    center: float
    width: float
    depth_ratio: float
    amplitude: float
    slope: float


def _initial_guess(frequency: np.ndarray, values: np.ndarray, intercept: float)->_Guess:
    n=frequency.size
    edge=max(2, n//20)
    x_edges=np.concatenate([frequency[:edge], frequency[-edge:]])
    y_edges=np.concatenate([values[:edge], values[-edge:]])
    slope, offset=np.polyfit(x_edges, y_edges, 1)
    baseline=offset+slope*frequency
    dip=baseline-values
    index=int(np.argmax(dip))
    depth=float(dip[index])
    center=float(frequency[index])
    below=np.nonzero(dip>=0.5*depth)[0]
    step=float(np.median(np.diff(frequency)))
    width=max(float(frequency[below[-1]]-frequency[below[0]]), 2.0*step) if below.size else 10.0*step
    level=float(baseline[index])-intercept
    if level<=0:
        raise InputError("spectrum background must sit above the intercept")
    return _Guess(
        center=center,
        width=width,
        depth_ratio=min(max(depth/level, 1e-6), 1.0-1e-9),
        amplitude=level,
        slope=float(slope),
    )


def _fit_regime(
    frequency: np.ndarray,
    values: np.ndarray,
    guess: _Guess,
    regime: Literal["over", "under"],
    intercept: float,
    external_ports: int,
)->tuple[object, np.ndarray, float, float]:
    scale=guess.width
    amp0=guess.amplitude
    center0=guess.center

    def unpack(x: np.ndarray)->tuple[float, ...]:
        f0=center0+x[0]*scale
        kappa=x[1]*scale
        return f0, kappa, x[2]*kappa, x[3], x[4]*amp0, x[5]*amp0/scale

    def residuals(x: np.ndarray)->np.ndarray:
        f0, kappa, external, phase, amplitude, slope=unpack(x)
        return (_lineshape(frequency, f0, kappa, external/external_ports, phase, amplitude, slope, intercept)-values)/amp0

    root=math.sqrt(1.0-guess.depth_ratio)
    # rho is the total external fraction; on resonance the dip is |1 - 2 rho/ports|^2
    if external_ports==2:
        rho0, rho_bounds=1.0-root, ((0.5, 1.0) if regime=="over" else (0.0, 0.5))
    elif regime=="over":
        rho0, rho_bounds=min(0.5*(1.0+root), 1.0-1e-6), (0.5, 1.0)
    else:
        rho0, rho_bounds=max(0.5*(1.0-root), 1e-6), (0.0, 0.5)
    rho0=min(max(rho0, rho_bounds[0]+1e-6), rho_bounds[1]-1e-6)
    span=(frequency[-1]-frequency[0])/scale
    lower=np.array([(frequency[0]-center0)/scale, 1e-6, rho_bounds[0], -math.pi, 0.0, -np.inf])
    upper=np.array([(frequency[-1]-center0)/scale, 10.0*span, rho_bounds[1], math.pi, np.inf, np.inf])
    x0=np.array([0.0, 1.0, rho0, 0.0, 1.0, guess.slope*scale/amp0])
    x0=np.clip(x0, lower+1e-12, upper-1e-12)
    result=least_squares(
        residuals,
        x0,
        bounds=(lower, upper),
        method="trf",
        jac="3-point",
        ftol=FIT_TOLERANCE,
        xtol=FIT_TOLERANCE,
        gtol=FIT_TOLERANCE,
        max_nfev=FIT_MAX_NFEV,
    )
    return result, np.array(unpack(result.x)), scale, amp0


def fit(
    s: Spectrum,
    coupling: CouplingRegime = "auto",
    intercept: float = 0.0,
    external_ports: Literal[1, 2] = 1,
)->FanoFit:
    """Bounded least-squares Fano-Lorentzian fit with an automatic initial guess.

    Args:
        s: Spectrum with >= 20 points spanning >= 3 linewidths
        coupling: "over" or "under" restricts kappa_e / kappa; "auto" fits both and keeps the better
        intercept: Fixed additive offset of the trace (detector dark level)
        external_ports: 2 for a two-sided (transmission) microwave resonator

    Returns:
        FanoFit; quality problems are reported in `flags`, never raised
    """
    frequency, values=s.frequency, s.psd
    if len(s)<MIN_FIT_POINTS:
        raise InputError(f"fit needs at least {MIN_FIT_POINTS} points, got {len(s)}")
    guess=_initial_guess(frequency, values, intercept)
    if frequency[-1]-frequency[0]<MIN_FIT_SPAN_LINEWIDTHS*guess.width:
        raise InputError("spectrum must span at least 3 linewidths")

    regimes: list[Literal["over", "under"]]=["over", "under"] if coupling=="auto" else [coupling]
    best=None
    for regime in regimes:
        attempt=_fit_regime(frequency, values, guess, regime, intercept, external_ports)
        if best is None or attempt[0].cost<best[0].cost:
            best=(*attempt, regime)
    result, params, scale, amp0, regime=best
    f0, kappa, external, phase, amplitude, slope=params
    rho=result.x[2]

    flags=[]
    if not result.success or result.status<=0:
        flags.append("not_converged")
    active=np.asarray(result.active_mask).copy()
    # the over/under split at rho = 0.5 is not a physical bound
    if (regime=="over" and active[2]==-1) or (regime=="under" and active[2]==1):
        active[2]=0
    if np.any(active!=0):
        flags.append("at_bound")

    dof=max(frequency.size-result.x.size, 1)
    variance=2.0*result.cost/dof
    covariance=np.linalg.pinv(result.jac.T@result.jac)*variance
    ports=float(external_ports)
    gradients={
        "f0": np.array([scale, 0, 0, 0, 0, 0]),
        "kappa_i": np.array([0, scale*(1.0-rho), -kappa, 0, 0, 0]),
        "kappa_e": np.array([0, scale*rho/ports, kappa/ports, 0, 0, 0]),
        "fano_phase": np.array([0, 0, 0, 1.0, 0, 0]),
        "amplitude": np.array([0, 0, 0, 0, amp0, 0]),
        "slope": np.array([0, 0, 0, 0, 0, amp0/scale]),
    }
    stderr={name: float(math.sqrt(max(g@covariance@g, 0.0))) for name, g in gradients.items()}
    kappa_i=max(kappa-external, np.finfo(float).tiny)
    model=FanoLorentzian(
        f0=f0,
        kappa_i=kappa_i,
        kappa_e=max(external/ports, np.finfo(float).tiny),
        fano_phase=phase,
        amplitude=amplitude,
        slope=slope,
        intercept=intercept,
        external_ports=external_ports,
    )
    residual_norm=float(np.linalg.norm(result.fun))*amp0
    logger.debug("fano fit finished", regime=regime, nfev=result.nfev, flags=flags, f0=f0)
    return FanoFit(model=model, stderr=stderr, residual_norm=residual_norm, nfev=int(result.nfev), coupling=regime, flags=flags)


# ============== Heterodyne Calibration ==============


class CalibrationResult(BaseModel):
    model_config=ConfigDict(frozen=True)

    sideband_flux: float = Field(..., ge=0, description="photons/s")
    sideband_flux_uncertainty: float = Field(..., ge=0)
    incident_flux: float = Field(..., ge=0, description="microwave photons/s")
    efficiency: float = Field(..., ge=0)
    efficiency_uncertainty: float = Field(..., ge=0, description="noise-floor 1-sigma")
    efficiency_systematic: float = Field(..., ge=0, description="systematic calibration bound")
    shot_noise_psd: float = Field(..., description="W/Hz")
    window: tuple[float, float]
    reference_bands: list[tuple[float, float]]
    flags: list[str] = Field(default_factory=list)


def _gaussian_peak(frequency: np.ndarray, center: float, fwhm: float)->np.ndarray:
    sigma=fwhm/(2.0*math.sqrt(2.0*math.log(2.0)))
    return np.exp(-0.5*((frequency-center)/sigma)**2)


def synthesize_heterodyne(
    sidebands: list[tuple[float, float]],
    frequency: np.ndarray,
    lo_shot_psd: float,
    rbw: float,
    dark: float | np.ndarray = 0.0,
    noise: float = 0.0,
    seed: int = 0,
)->tuple[Spectrum, Spectrum]:
    """Heterodyne beat-note spectrum for sidebands at (offset Hz, photons/s).

    Each sideband is a Gaussian of FWHM `rbw` normalized on the grid so that its integral
    above the shot-noise floor equals flux * lo_shot_psd. `noise` adds seeded relative
    Gaussian noise to both traces.

    Returns:
        (signal, dark) spectra sharing the grid
    """
    grid=np.asarray(frequency, dtype=float)
    if not rbw>0 or not lo_shot_psd>0:
        raise DomainError("rbw and lo_shot_psd must be positive")
    offsets=[offset for offset, _ in sidebands]
    if len(set(offsets))!=len(offsets):
        raise DomainError("sideband offsets must be distinct")
    dark_level=np.broadcast_to(np.asarray(dark, dtype=float), grid.shape).copy()
    signal=dark_level+lo_shot_psd
    for offset, flux in sidebands:
        if flux<0:
            raise DomainError(f"sideband flux must be >= 0, got {flux}")
        shape=_gaussian_peak(grid, offset, rbw)
        area=trapezoid(shape, grid)
        if area<=0:
            raise DomainError(f"sideband at {offset} Hz lies outside the grid")
        signal=signal+flux*lo_shot_psd*shape/area
    if noise>0:
        rng=np.random.default_rng(seed)
        signal=signal*(1.0+noise*rng.standard_normal(grid.size))
        dark_level=dark_level*(1.0+noise*rng.standard_normal(grid.size))
    return (
        Spectrum(frequency=grid, psd=np.clip(signal, 0.0, None), rbw=rbw, kind="heterodyne_rf"),
        Spectrum(frequency=grid, psd=np.clip(dark_level, 0.0, None), rbw=rbw, kind="heterodyne_rf"),
    )


def calibrate_efficiency(
    signal: Spectrum,
    dark: Spectrum,
    window: tuple[float, float],
    rf_power_incident: float,
    omega_mw: float,
    reference_width: float | None = None,
    systematic_fraction: float = DEFAULT_SYSTEMATIC_FRACTION,
)->CalibrationResult:
    """Dark subtraction, adjacent shot-noise referencing, peak integration, photon-flux efficiency.

    Args:
        signal: Spectrum with the converted sideband
        dark: Spectrum recorded without input signal on the same grid
        window: Peak integration window (Hz)
        rf_power_incident: Microwave power at the device (W)
        omega_mw: Microwave drive frequency (rad/s)
        reference_width: Width of each adjacent shot-noise band; defaults to the window width
        systematic_fraction: Relative systematic bound reported with eta

    Raises:
        InputError: mismatched grids or a window without room for reference bands
    """
    if signal.frequency.shape!=dark.frequency.shape or not np.allclose(signal.frequency, dark.frequency, rtol=1e-12, atol=0):
        raise InputError("signal and dark spectra must share the same frequency grid")
    lo, hi=window
    if not lo<hi:
        raise InputError(f"integration window must satisfy lo < hi, got {window}")
    width=hi-lo if reference_width is None else reference_width
    frequency=signal.frequency
    bands=[(lo-width, lo), (hi, hi+width)]
    if bands[0][0]<frequency[0] or bands[1][1]>frequency[-1]:
        raise InputError("integration window leaves no room for the adjacent reference bands")

    excess=signal.psd-dark.psd
    reference=((frequency>=bands[0][0])&(frequency<bands[0][1]))|((frequency>bands[1][0])&(frequency<=bands[1][1]))
    inside=(frequency>=lo)&(frequency<=hi)
    if reference.sum()<2 or inside.sum()<2:
        raise InputError("window and reference bands need at least two grid points each")
    shot_noise=float(np.mean(excess[reference]))
    floor_scatter=float(np.std(excess[reference], ddof=1))

    incident=photon_flux(rf_power_incident, omega_mw)
    flags: list[str]=[]
    integrated=float(trapezoid(excess[inside]-shot_noise, frequency[inside]))
    step=float(np.median(np.diff(frequency[inside])))
    integrated_sigma=floor_scatter*step*math.sqrt(int(inside.sum()))

    if shot_noise<=0:
        flags.extend(["no_shot_noise_reference", "consistent_with_zero"])
        flux=flux_sigma=0.0
    else:
        flux=integrated/shot_noise
        flux_sigma=integrated_sigma/shot_noise
        if flux<=0:
            flags.append("consistent_with_zero")
            flux=0.0
        elif flux<2.0*flux_sigma:
            flags.append("consistent_with_zero")

    efficiency=flux/incident if incident>0 else 0.0
    logger.debug("calibration", flux=flux, shot_noise=shot_noise, efficiency=efficiency, flags=flags)
    return CalibrationResult(
        sideband_flux=flux,
        sideband_flux_uncertainty=flux_sigma,
        incident_flux=incident,
        efficiency=efficiency,
        efficiency_uncertainty=flux_sigma/incident if incident>0 else 0.0,
        efficiency_systematic=systematic_fraction*efficiency,
        shot_noise_psd=shot_noise,
        window=(float(lo), float(hi)),
        reference_bands=[(float(a), float(b)) for a, b in bands],
        flags=flags,
    )


# ============== Stroboscopic Tuning ==============


def synthesize_stroboscopic(m: FanoLorentzian, splitting: float, frequency: np.ndarray)->Spectrum:
    """Square-wave drive: the resonance spends half the scan at f0 - s/2 and half at f0 + s/2."""
    grid=np.asarray(frequency, dtype=float)
    low=m.model_copy(update={"f0": m.f0-0.5*splitting})
    high=m.model_copy(update={"f0": m.f0+0.5*splitting})
    values=0.5*(eval_lineshape(low, grid).psd+eval_lineshape(high, grid).psd)
    return Spectrum(frequency=grid, psd=values, kind="optical_reflection")


@dataclass(frozen=True)
class SplitFit:
    center: float
    splitting: float
    splitting_stderr: float
    kappa_tot: float
    flags: list[str] = field(default_factory=list)


def fit_split_resonance(s: Spectrum, initial_splitting: float | None = None, intercept: float = 0.0)->SplitFit:
    """Joint fit of two superposed dips sharing linewidths and background; returns the splitting."""
    frequency, values=s.frequency, s.psd
    if len(s)<MIN_FIT_POINTS:
        raise InputError(f"fit needs at least {MIN_FIT_POINTS} points, got {len(s)}")
    guess=_initial_guess(frequency, values, intercept)
    scale=guess.width
    amp0=guess.amplitude
    starts=[0.25, 0.5, 1.0, 1.5] if initial_splitting is None else [initial_splitting/scale]

    def model(x: np.ndarray)->np.ndarray:
        center=guess.center+x[0]*scale
        half=0.5*x[1]*scale
        kappa=x[2]*scale
        external=x[3]*kappa
        amplitude=x[4]*amp0
        return 0.5*(
            _lineshape(frequency, center-half, kappa, external, 0.0, amplitude, 0.0, intercept)
            +_lineshape(frequency, center+half, kappa, external, 0.0, amplitude, 0.0, intercept)
        )

    span=(frequency[-1]-frequency[0])/scale
    lower=np.array([-span, 0.0, 1e-6, 0.0, 0.0])
    upper=np.array([span, span, 10.0*span, 1.0, np.inf])
    result=None
    for split0 in starts:
        x0=np.clip(np.array([0.0, split0, 0.5, 0.75, 1.0]), lower+1e-9, upper-1e-9)
        attempt=least_squares(
            lambda x: (model(x)-values)/amp0,
            x0,
            bounds=(lower, upper),
            method="trf",
            jac="3-point",
            ftol=FIT_TOLERANCE,
            xtol=FIT_TOLERANCE,
            gtol=FIT_TOLERANCE,
            max_nfev=FIT_MAX_NFEV,
        )
        if result is None or attempt.cost<result.cost:
            result=attempt
    flags=[] if result.success else ["not_converged"]
    dof=max(frequency.size-result.x.size, 1)
    covariance=np.linalg.pinv(result.jac.T@result.jac)*2.0*result.cost/dof
    return SplitFit(
        center=guess.center+result.x[0]*scale,
        splitting=result.x[1]*scale,
        splitting_stderr=math.sqrt(max(covariance[1, 1], 0.0))*scale,
        kappa_tot=result.x[2]*scale,
        flags=flags,
    )


@dataclass(frozen=True)
class TuningResult:
    tuning: float
    tuning_stderr: float
    intercept: float
    rvalue: float

    @property
    def tuning_pm_per_volt(self)->float:
        return self.tuning*1e12


def tuning_from_splittings(vpp: np.ndarray, splittings: np.ndarray, wavelength: float)->TuningResult:
    """Linear regression of frequency splitting (Hz) vs peak-to-peak voltage, reported in m/V."""
    v=np.asarray(vpp, dtype=float)
    split=np.asarray(splittings, dtype=float)
    if v.size<3 or v.size!=split.size:
        raise InputError("need at least three matching (V_pp, splitting) pairs")
    regression=linregress(v, split)
    to_wavelength=wavelength**2/CONSTANTS.c
    return TuningResult(
        tuning=regression.slope*to_wavelength,
        tuning_stderr=regression.stderr*to_wavelength,
        intercept=regression.intercept,
        rvalue=regression.rvalue,
    )
