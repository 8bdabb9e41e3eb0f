"""Quasiparticle and thermal response of the microwave resonator to pulsed light.

dn/dt = G (s(t) + w theta + w2 theta2) + G_bg - n^2 / K

s(t) is the smoothed on/off drive, theta and theta2 are first-order thermal bath states
following s(t) with separate rise and fall time constants, G_bg = n_bg^2 / K holds a
background density, and K = tau_qp * n_qp is the recombination constant of the lifetime law.
"""

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import curve_fit

from eotk.core.quantities import TWO_PI, SuperconductorParams
from eotk.core.superconductor import (
    qp_density,
    recombination_constant,
    regime_edge_temperature,
    resonator_response,
)
from eotk.exceptions import DegenerateInputError, DomainError, InputError, NumericalError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

ODE_RTOL=1e-8
MIN_EXPONENTIAL_SAMPLES=10


# ============== Domain Types ==============


class PulseSchedule(BaseModel):
    """Periodic square optical drive; the first pulse switches on at `start`."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    period: float = Field(20e-3, gt=0, description="s")
    on_duration: float = Field(2e-3, gt=0, description="s")
    optical_power_on: float = Field(1e-6, ge=0, description="W at the chip")
    absorbed_fraction: float = Field(0.01, ge=0, le=1)
    switch_rise_time: float = Field(100e-9, ge=0, description="s")
    start: float = Field(0.0, ge=0, description="s")

    @model_validator(mode="after")
    def _duty(self)->"PulseSchedule":
        if self.on_duration>self.period:
            raise ValueError("on_duration must not exceed the period")
        return self

    @property
    def always_on(self)->bool:
        return self.on_duration==self.period

    def switch_times(self, horizon: float)->list[tuple[float, bool]]:
        """(time, on) events inside (0, horizon), in order."""
        if self.always_on:
            return [(self.start, True)] if 0<self.start<horizon else []
        events=[]
        k=0
        while True:
            on=self.start+k*self.period
            if on>=horizon:
                break
            if on>0:
                events.append((on, True))
            off=on+self.on_duration
            if 0<off<horizon:
                events.append((off, False))
            k+=1
        return events


class RateModel(BaseModel):
    """Generation-recombination parameters (densities in um^-3)."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    generation_rate: float = Field(..., ge=0, description="G at full drive, um^-3 s^-1")
    recombination_constant: float = Field(..., gt=0, description="K = tau_qp n_qp, um^-3 s")
    background_density: float = Field(0.0, ge=0, description="um^-3")
    tau_rise: float = Field(655e-6, gt=0, description="s")
    tau_fall: float = Field(450e-6, gt=0, description="s")
    thermal_weight: float = Field(0.0, ge=0)
    slow_stage_weight: float = Field(0.0, ge=0)
    slow_stage_tau: float = Field(1.5, gt=0, description="s")

    @classmethod
    def from_superconductor(
        cls,
        p: SuperconductorParams,
        generation_rate: float | None = None,
        schedule: PulseSchedule | None = None,
        volume: float = 5200.0*5.0*0.1,
        pair_breaking_efficiency: float = 0.57,
        **kwargs,
    )->"RateModel":
        """K from the film's lifetime law; G given directly or from the schedule's absorbed power."""
        if generation_rate is None:
            if schedule is None:
                raise DomainError("give either generation_rate or a schedule")
            generation_rate=generation_from_absorbed_power(
                schedule.optical_power_on*schedule.absorbed_fraction, volume, p.Delta0, pair_breaking_efficiency
            )
        return cls(generation_rate=generation_rate, recombination_constant=recombination_constant(p), **kwargs)

    @property
    def background_generation(self)->float:
        return self.background_density**2/self.recombination_constant

    def decay_rate(self, n_qp: float)->float:
        """Instantaneous relative decay rate -dn/dt / n without drive, equal to 1/tau_qp(n)."""
        return n_qp/self.recombination_constant

    def steady_state(self, drive: float = 1.0)->float:
        return math.sqrt((self.generation_rate*drive+self.background_generation)*self.recombination_constant)


def generation_from_absorbed_power(absorbed_power: float, volume: float, gap: float, pair_breaking_efficiency: float = 0.57)->float:
    """Quasiparticle generation rate eta P / (Delta V) in um^-3 s^-1 (volume in um^3)."""
    if not volume>0 or not gap>0:
        raise DomainError("volume and gap must be positive")
    if not 0<pair_breaking_efficiency<=1:
        raise DomainError("pair-breaking efficiency must lie in (0, 1]")
    return pair_breaking_efficiency*absorbed_power/(gap*volume)


@dataclass(frozen=True)
class TimeSeries:
    time: np.ndarray
    values: np.ndarray
    name: str = "value"
    extra: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self)->None:
        time=np.asarray(self.time, dtype=float)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "values", np.asarray(self.values))
        if time.ndim!=1 or time.size!=self.values.shape[0]:
            raise InputError("time grid and values must have matching leading length")
        if np.any(np.diff(time)<=0):
            raise InputError("time grid must be strictly increasing")


# ============== Simulation ==============


def _drive(t: float, t0: float, s0: float, on: bool, rise: float)->float:
    decay=math.exp(-(t-t0)/rise) if rise>0 else 0.0
    return 1.0-(1.0-s0)*decay if on else s0*decay


def simulate_qp_dynamics(
    model: RateModel,
    schedule: PulseSchedule,
    horizon: float,
    n0: float | None = None,
    t_eval: np.ndarray | None = None,
    samples: int = 2001,
)->TimeSeries:
    """Integrate the rate equations piecewise between switch events.

    Args:
        model: Rate parameters
        schedule: Drive schedule
        horizon: End time (s); must cover at least one period
        n0: Initial density; defaults to the background density
        t_eval: Output grid inside [0, horizon]; uniform `samples` points otherwise

    Returns:
        TimeSeries of n_qp with `extra` holding the drive and bath states

    Raises:
        NumericalError: integrator failure, with the last good state
    """
    if horizon<schedule.period and not schedule.always_on:
        raise DomainError("horizon must cover at least one period")
    grid=np.linspace(0.0, horizon, samples) if t_eval is None else np.asarray(t_eval, dtype=float)
    if grid[0]<0 or grid[-1]>horizon:
        raise DomainError("t_eval must lie inside [0, horizon]")

    k=model.recombination_constant
    g=model.generation_rate
    g_bg=model.background_generation

    state=np.array([model.background_density if n0 is None else n0, 0.0, 0.0])
    boundaries=[(0.0, schedule.start==0)]+schedule.switch_times(horizon)
    boundaries.append((horizon, boundaries[-1][1]))

    out_n=np.empty(grid.size)
    out_drive=np.empty(grid.size)
    out_theta=np.empty(grid.size)
    drive_start=0.0
    for (t0, on), (t1, _) in zip(boundaries[:-1], boundaries[1:]):
        if t1<=t0:
            continue
        s0=drive_start
        atol=[1e-9*max(state[0], model.steady_state(), 1.0), 1e-12, 1e-12]

        def rhs(t: float, y: np.ndarray, t0=t0, s0=s0, on=on)->list[float]:
            s=_drive(t, t0, s0, on, schedule.switch_rise_time)
            theta_rate=(s-y[1])/(model.tau_rise if s>y[1] else model.tau_fall)
            slow_rate=(s-y[2])/model.slow_stage_tau
            n=y[0]
            generation=g*(s+model.thermal_weight*y[1]+model.slow_stage_weight*y[2])+g_bg
            return [generation-n*n/k, theta_rate, slow_rate]

        mask=(grid>=t0)&((grid<t1)|((t1==horizon)&(grid<=t1)))
        # segment end is always evaluated so the next segment starts from it
        evaluation=np.union1d(grid[mask], [t1])
        solution=solve_ivp(rhs, (t0, t1), state, method="LSODA", rtol=ODE_RTOL, atol=atol, t_eval=evaluation)
        if not solution.success:
            raise NumericalError(
                f"rate equations failed on segment [{t0}, {t1}] s: {solution.message}",
                {"t0": t0, "t1": t1, "last_good_state": state.tolist()},
            )
        if mask.any():
            picked=np.searchsorted(evaluation, grid[mask])
            out_n[mask]=solution.y[0][picked]
            out_theta[mask]=solution.y[1][picked]
            out_drive[mask]=[_drive(t, t0, s0, on, schedule.switch_rise_time) for t in grid[mask]]
        state=solution.y[:, -1]
        drive_start=_drive(t1, t0, s0, on, schedule.switch_rise_time)

    return TimeSeries(
        time=grid,
        values=np.clip(out_n, 0.0, None),
        name="n_qp_per_um3",
        extra={"drive": out_drive, "theta": out_theta},
    )


def relaxation_timescale(series: TimeSeries, t_off: float, background: float | None = None)->float:
    """1/e time of the excess density after the drive switches off at `t_off`.

    Raises:
        DegenerateInputError: no excess density at switch-off, or no 1/e crossing in the series
    """
    time, values=series.time, np.asarray(series.values, dtype=float)
    floor=float(values[-1]) if background is None else background
    start=np.interp(t_off, time, values)-floor
    if start<=0:
        raise DegenerateInputError("no excess density at switch-off")
    after=time>=t_off
    t=np.concatenate([[t_off], time[after]])
    x=np.concatenate([[1.0], (values[after]-floor)/start])
    below=np.nonzero(x<=math.exp(-1.0))[0]
    if below.size==0:
        raise DegenerateInputError("excess density never relaxes to 1/e within the series")
    i=int(below[0])
    # linear interpolation of the crossing
    target=math.exp(-1.0)
    crossing=t[i-1]+(target-x[i-1])*(t[i]-t[i-1])/(x[i]-x[i-1])
    return float(crossing-t_off)


# ============== Resonator Mapping ==============


class ResonatorProbe(BaseModel):
    """Cold microwave resonance probed in transmission (rates as full widths in Hz)."""

    model_config=ConfigDict(frozen=True, extra="forbid")

    f0_cold: float = Field(6.672e9, gt=0)
    kappa_i_cold: float = Field(2.53e6, gt=0)
    kappa_e: float = Field(1.91e6, gt=0, description="per port")
    alpha_k: float = Field(0.05, gt=0, lt=1)


@dataclass(frozen=True)
class _ResponseTable:
    n_min: float
    n_max: float
    log_shift: CubicSpline
    log_inverse_q_qp: CubicSpline


@lru_cache(maxsize=32)
def _response_table(film: SuperconductorParams, probe: ResonatorProbe, points: int = 240)->_ResponseTable:
    """Splines of log(f0_cold - f0) and log(1/Q_qp) against log n_qp.

    Nodes are evenly spaced in 1/T, which is close to even in log n_qp, and each node is an
    exact resonator_response evaluation, so the splines reproduce qp_temperature followed by
    resonator_response to well below 1e-6.
    """
    t_edge=regime_edge_temperature(film, TWO_PI*probe.f0_cold)
    temperatures=1.0/np.linspace(1.0/(0.08*film.Tc), 1.0/(t_edge*(1.0-1e-4)), points)
    log_n, log_shift, log_inverse_q=[], [], []
    for T in temperatures:
        n=qp_density(film, float(T))
        response=resonator_response(film, probe.alpha_k, probe.f0_cold, float(T))
        shift=probe.f0_cold-response.f0
        if n<=0 or shift<=0 or math.isinf(response.q_qp):
            continue
        log_n.append(math.log(n))
        log_shift.append(math.log(shift))
        log_inverse_q.append(-math.log(response.q_qp))
    if len(log_n)<4:
        raise NumericalError("resonator response table has too few usable temperatures", {"usable": len(log_n)})
    return _ResponseTable(
        n_min=math.exp(log_n[0]),
        n_max=math.exp(log_n[-1]),
        log_shift=CubicSpline(log_n, log_shift),
        log_inverse_q_qp=CubicSpline(log_n, log_inverse_q),
    )


@dataclass(frozen=True)
class SpectrumMatrix:
    """Stacked transmission traces: rows are time samples, columns probe frequencies."""

    time: np.ndarray
    frequency: np.ndarray
    s21: np.ndarray
    f0: np.ndarray
    q_total: np.ndarray
    n_qp: np.ndarray


def resonance_track(
    n_qp: np.ndarray,
    film: SuperconductorParams,
    probe: ResonatorProbe,
)->tuple[np.ndarray, np.ndarray]:
    """(f0, Q_total) for each density; the thermal-equivalent temperature sets the response.

    Densities below the coldest tabulated point keep the cold resonance.
    """
    table=_response_table(film, probe)
    n=np.asarray(n_qp, dtype=float)
    if np.any(n>table.n_max):
        raise DomainError("quasiparticle density exceeds the sub-gap model range")
    cold=n<table.n_min
    log_n=np.log(np.clip(n, table.n_min, None))
    f0=np.where(cold, probe.f0_cold, probe.f0_cold-np.exp(table.log_shift(log_n)))
    inverse_q_qp=np.where(cold, 0.0, np.exp(table.log_inverse_q_qp(log_n)))
    kappa_cold=probe.kappa_i_cold+2.0*probe.kappa_e
    inverse_q=kappa_cold/probe.f0_cold+inverse_q_qp
    return f0, 1.0/inverse_q


def time_resolved_spectrum(
    model: RateModel,
    schedule: PulseSchedule,
    film: SuperconductorParams,
    probe: ResonatorProbe,
    probe_frequencies: np.ndarray,
    horizon: float,
    t_eval: np.ndarray | None = None,
)->SpectrumMatrix:
    """Complex S21(f, t) of the two-port resonator as n_qp(t) shifts f0 and broadens the line."""
    series=simulate_qp_dynamics(model, schedule, horizon, t_eval=t_eval)
    frequency=np.asarray(probe_frequencies, dtype=float)
    f0, q_total=resonance_track(series.values, film, probe)
    kappa=f0/q_total
    external=probe.kappa_e
    delta=frequency[None, :]-f0[:, None]
    s21=1.0-external/(0.5*kappa[:, None]+1j*delta)
    logger.info("time-resolved spectrum built", times=int(series.time.size), frequencies=int(frequency.size))
    return SpectrumMatrix(time=series.time, frequency=frequency, s21=s21, f0=f0, q_total=q_total, n_qp=series.values)


def conversion_window(time: np.ndarray, q_total: np.ndarray, t_on: float, tolerance: float = 0.05)->float:
    """Time after switch-on during which Q stays within `tolerance` of its value at switch-on."""
    t=np.asarray(time, dtype=float)
    q=np.asarray(q_total, dtype=float)
    reference=float(np.interp(t_on, t, q))
    threshold=(1.0-tolerance)*reference
    after=t>=t_on
    t_after, q_after=t[after], q[after]
    below=np.nonzero(q_after<threshold)[0]
    if below.size==0:
        return float(t_after[-1]-t_on)
    i=int(below[0])
    if i==0:
        return 0.0
    crossing=t_after[i-1]+(threshold-q_after[i-1])*(t_after[i]-t_after[i-1])/(q_after[i]-q_after[i-1])
    return float(crossing-t_on)


# ============== Exponential Fit ==============


class ExponentialFit(BaseModel):
    model_config=ConfigDict(frozen=True)

    amplitude: float
    tau: float
    offset: float
    stderr: dict[str, float]
    residual_norm: float
    t_start: float
    flags: list[str] = Field(default_factory=list)


def _exponential(t: np.ndarray, amplitude: float, tau: float, offset: float)->np.ndarray:
    return amplitude*np.exp(-t/tau)+offset


def _exponential_jac(t: np.ndarray, amplitude: float, tau: float, offset: float)->np.ndarray:
    e=np.exp(-t/tau)
    return np.column_stack([e, amplitude*t*e/tau**2, np.ones_like(t)])


def fit_exponential(ts: TimeSeries, window: tuple[float, float] | None = None)->ExponentialFit:
    """Least-squares a exp(-(t - t_start)/tau) + c on the samples inside `window`.

    Returns:
        ExponentialFit; `flags` holds "degenerate" for a flat series and "not_converged" on failure
    """
    time=ts.time
    values=np.asarray(ts.values, dtype=float)
    if window is not None:
        lo, hi=window
        if lo<time[0] or hi>time[-1] or not lo<hi:
            raise InputError(f"window {window} is not inside the time grid")
        mask=(time>=lo)&(time<=hi)
        time, values=time[mask], values[mask]
    if time.size<MIN_EXPONENTIAL_SAMPLES:
        raise InputError(f"exponential fit needs at least {MIN_EXPONENTIAL_SAMPLES} samples, got {time.size}")
    t_start=float(time[0])
    t=time-t_start
    span=float(np.ptp(values))
    scale=max(float(np.max(np.abs(values))), 1e-300)
    if span<=1e-12*scale:
        return ExponentialFit(
            amplitude=0.0,
            tau=math.nan,
            offset=float(np.mean(values)),
            stderr={"amplitude": math.nan, "tau": math.nan, "offset": math.nan},
            residual_norm=0.0,
            t_start=t_start,
            flags=["degenerate"],
        )
    offset0=float(values[-1])
    amplitude0=float(values[0]-values[-1])
    relative=(values-offset0)/amplitude0 if amplitude0!=0 else np.zeros_like(values)
    crossing=np.nonzero(relative<=math.exp(-1.0))[0]
    tau0=float(t[crossing[0]]) if crossing.size and t[crossing[0]]>0 else float(t[-1])/3.0
    flags: list[str]=[]
    try:
        params, covariance=curve_fit(
            _exponential,
            t,
            values,
            p0=[amplitude0, tau0, offset0],
            jac=_exponential_jac,
            bounds=([-np.inf, np.finfo(float).tiny, -np.inf], [np.inf, np.inf, np.inf]),
            method="trf",
            ftol=1e-12,
            xtol=1e-12,
            gtol=1e-12,
            max_nfev=2000,
        )
    except RuntimeError as exc:
        logger.warning("exponential fit did not converge", reason=str(exc))
        params=np.array([amplitude0, tau0, offset0])
        covariance=np.full((3, 3), np.inf)
        flags.append("not_converged")
    residual=values-_exponential(t, *params)
    errors=np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    if params[1]>10.0*t[-1]:
        flags.append("tau_exceeds_window")
    return ExponentialFit(
        amplitude=float(params[0]),
        tau=float(params[1]),
        offset=float(params[2]),
        stderr={"amplitude": float(errors[0]), "tau": float(errors[1]), "offset": float(errors[2])},
        residual_norm=float(np.linalg.norm(residual)),
        t_start=t_start,
        flags=flags,
    )
