import math

import numpy as np
import pytest
from pydantic import ValidationError

from eotk.core.dynamics import (
    PulseSchedule,
    RateModel,
    ResonatorProbe,
    TimeSeries,
    conversion_window,
    fit_exponential,
    generation_from_absorbed_power,
    relaxation_timescale,
    resonance_track,
    simulate_qp_dynamics,
    time_resolved_spectrum,
)
from eotk.core.spectra import Spectrum, fit
from eotk.core.superconductor import qp_density, qp_temperature, recombination_constant, resonator_response
from eotk.exceptions import DomainError, InputError

K=0.12


# ============== Schedule and Rates ==============


def test_switch_events():
    schedule=PulseSchedule(period=20e-3, on_duration=2e-3)
    events=schedule.switch_times(40e-3)
    assert [on for _, on in events]==[False, True, False]
    assert [t for t, _ in events]==pytest.approx([2e-3, 20e-3, 22e-3])


def test_on_duration_longer_than_period_rejected():
    with pytest.raises(ValidationError):
        PulseSchedule(period=1e-3, on_duration=2e-3)


def test_generation_from_absorbed_pump(film):
    generation=generation_from_absorbed_power(1e-6*0.01, 2600.0, film.Delta0)
    assert generation==pytest.approx(8.19e10, rel=2e-3)
    model=RateModel.from_superconductor(film, schedule=PulseSchedule(), volume=2600.0)
    assert model.steady_state()==pytest.approx(9.93e4, rel=5e-3)


def test_rate_model_needs_a_generation_source(film):
    with pytest.raises(DomainError):
        RateModel.from_superconductor(film)


def test_decay_rate_is_inverse_lifetime():
    model=RateModel(generation_rate=1e9, recombination_constant=K)
    assert model.decay_rate(5e3)==pytest.approx(5e3/K)


# ============== Simulation ==============


def test_constant_drive_follows_tanh():
    model=RateModel(generation_rate=1e9, recombination_constant=K)
    schedule=PulseSchedule(period=1e-3, on_duration=1e-3, switch_rise_time=0.0)
    t=np.linspace(0.0, 1e-4, 201)
    series=simulate_qp_dynamics(model, schedule, 1e-4, n0=0.0, t_eval=t)
    n_ss=model.steady_state()
    expected=n_ss*np.tanh(t*math.sqrt(model.generation_rate/K))
    np.testing.assert_allclose(series.values, expected, rtol=1e-5, atol=1e-6*n_ss)
    assert series.values[-1]==pytest.approx(n_ss, rel=1e-5)


def test_free_decay_follows_recombination_law():
    model=RateModel(generation_rate=0.0, recombination_constant=K)
    schedule=PulseSchedule(period=1e-3, on_duration=1e-3, switch_rise_time=0.0)
    t=np.linspace(0.0, 1e-3, 101)
    series=simulate_qp_dynamics(model, schedule, 1e-3, n0=1e5, t_eval=t)
    np.testing.assert_allclose(series.values, 1e5/(1.0+1e5*t/K), rtol=1e-5)


def test_pulsed_response_is_periodic():
    model=RateModel(generation_rate=1e9, recombination_constant=K, thermal_weight=1.0)
    schedule=PulseSchedule()
    series=simulate_qp_dynamics(model, schedule, 3*schedule.period, samples=6001)
    steps=2000
    second=series.values[steps+50:steps+190]
    third=series.values[2*steps+50:2*steps+190]
    np.testing.assert_allclose(second, third, rtol=1e-5)
    assert series.extra["drive"][steps+100]==pytest.approx(1.0)
    assert series.extra["drive"][steps+1000]==pytest.approx(0.0, abs=1e-12)


def test_horizon_must_cover_a_period():
    model=RateModel(generation_rate=1e9, recombination_constant=K)
    with pytest.raises(DomainError):
        simulate_qp_dynamics(model, PulseSchedule(), 1e-3)


def test_relaxation_timescale_of_exponential():
    t=np.linspace(0.0, 10e-3, 10001)
    series=TimeSeries(time=t, values=5.0+10.0*np.exp(-t/1e-3))
    assert relaxation_timescale(series, 0.0, background=5.0)==pytest.approx(1e-3, rel=1e-4)


def test_relaxation_timescale_after_switch_off():
    model=RateModel(generation_rate=1e9, recombination_constant=K, background_density=100.0)
    schedule=PulseSchedule(period=20e-3, on_duration=2e-3, switch_rise_time=0.0)
    series=simulate_qp_dynamics(model, schedule, schedule.period, samples=20001)
    n_on=model.steady_state()
    # excess decays as 1/(1 + n t / K) to first order in the background
    tau=relaxation_timescale(series, 2e-3, background=100.0)
    assert tau==pytest.approx((math.e-1.0)*K/n_on, rel=0.1)


def test_fast_transient_back_to_background(film):
    k=recombination_constant(film)
    model=RateModel(generation_rate=(5e4**2-5e3**2)/k, recombination_constant=k, background_density=5e3)
    schedule=PulseSchedule(period=1e-3, on_duration=0.2e-3, switch_rise_time=0.0)
    series=simulate_qp_dynamics(model, schedule, 1e-3, t_eval=np.linspace(0.0, 1e-3, 100001))
    tau=relaxation_timescale(series, 0.2e-3, background=5e3)
    # n = n_bg coth(n_bg t / K + acoth(n_on / n_bg))
    crossing=1.0+9.0/math.e
    expected=k/5e3*(math.atanh(1.0/crossing)-math.atanh(0.1))
    assert 3e-6<=tau<=30e-6
    assert tau==pytest.approx(expected, rel=0.01)


# ============== Resonator Mapping ==============


def test_resonance_track_is_monotone(film):
    probe=ResonatorProbe()
    densities=np.array([0.0, qp_density(film, 0.2), qp_density(film, 0.25)])
    f0, q_total=resonance_track(densities, film, probe)
    assert f0[0]==probe.f0_cold
    assert f0[0]>f0[1]>f0[2]
    assert q_total[0]==pytest.approx(6.672e9/6.35e6)
    assert q_total[0]>q_total[1]>q_total[2]


def test_resonance_track_rejects_densities_beyond_model(film):
    with pytest.raises(DomainError):
        resonance_track(np.array([1e9]), film, ResonatorProbe())


def test_time_resolved_spectrum_shape(film):
    model=RateModel(generation_rate=1e7, recombination_constant=K)
    schedule=PulseSchedule()
    probe=np.linspace(6.662e9, 6.682e9, 21)
    matrix=time_resolved_spectrum(model, schedule, film, ResonatorProbe(), probe, schedule.period, t_eval=np.linspace(0.0, schedule.period, 11))
    assert matrix.s21.shape==(11, 21)
    assert np.all(np.abs(matrix.s21)<=1.0+1e-12)


def test_resonance_track_matches_direct_response(film):
    resonator=ResonatorProbe()
    densities=np.array([1e2, 5e3, 5e4, 3e5])
    f0, q_total=resonance_track(densities, film, resonator)
    for n, f_track, q_track in zip(densities, f0, q_total):
        state=resonator_response(film, resonator.alpha_k, resonator.f0_cold, qp_temperature(film, float(n)))
        expected_q=1.0/((2.53e6+2.0*1.91e6)/6.672e9+1.0/state.q_qp)
        assert f_track==pytest.approx(state.f0, rel=1e-6)
        assert q_track==pytest.approx(expected_q, rel=1e-6)


def test_time_resolved_columns_refit_to_the_track(film):
    model=RateModel.from_superconductor(film, schedule=PulseSchedule(), volume=2600.0)
    schedule=PulseSchedule()
    resonator=ResonatorProbe()
    frequency=np.linspace(resonator.f0_cold-50e6, resonator.f0_cold+30e6, 801)
    times=np.array([0.0, 1e-4, 5e-4, 1e-3, 2e-3, 2.05e-3, 2.5e-3, 5e-3, 19e-3])
    matrix=time_resolved_spectrum(model, schedule, film, resonator, frequency, schedule.period, t_eval=times)
    total_shift=resonator.f0_cold-matrix.f0.min()
    assert total_shift>1e6
    for row, f0 in zip(matrix.s21, matrix.f0):
        trace=Spectrum(frequency=frequency, psd=np.abs(row)**2, kind="microwave_s21")
        result=fit(trace, coupling="auto", external_ports=2)
        assert abs(result.model.f0-f0)<=0.005*total_shift


def test_conversion_window():
    t=np.linspace(0.0, 3.0, 3001)
    q=np.where(t<1.0, 1e4, 1e4*(1.0-0.1*(t-1.0)))
    assert conversion_window(t, q, 0.0)==pytest.approx(1.5, rel=1e-3)
    assert conversion_window(t, np.full(t.size, 1e4), 0.0)==pytest.approx(3.0)


# ============== Exponential Fit ==============


def test_exponential_fit_recovers_decay():
    t=np.linspace(0.0, 5e-3, 501)
    result=fit_exponential(TimeSeries(time=t, values=2.0+3.0*np.exp(-t/1e-3)))
    assert result.tau==pytest.approx(1e-3, rel=1e-5)
    assert result.amplitude==pytest.approx(3.0, rel=1e-5)
    assert result.offset==pytest.approx(2.0, rel=1e-5)
    assert result.flags==[]


def test_exponential_fit_window_shifts_origin():
    t=np.linspace(0.0, 10e-3, 1001)
    values=np.where(t<2e-3, 5.0, 1.0+4.0*np.exp(-(t-2e-3)/0.5e-3))
    result=fit_exponential(TimeSeries(time=t, values=values), window=(1.995e-3, 8e-3))
    assert result.t_start==pytest.approx(2e-3, abs=1e-9)
    assert result.tau==pytest.approx(0.5e-3, rel=1e-5)


@pytest.mark.parametrize("tau", [655e-6, 450e-6])
def test_exponential_fit_recovers_bath_time_constants(tau):
    t=np.linspace(0.0, 5e-3, 501)
    result=fit_exponential(TimeSeries(time=t, values=1.0+2.0*np.exp(-t/tau)))
    assert result.tau==pytest.approx(tau, rel=1e-3)


def test_exponential_fit_under_additive_noise():
    rng=np.random.default_rng(450)
    t=np.linspace(0.0, 5e-3, 501)
    clean=np.exp(-t/450e-6)
    for _ in range(100):
        result=fit_exponential(TimeSeries(time=t, values=clean+0.01*rng.standard_normal(t.size)))
        assert result.tau==pytest.approx(450e-6, rel=0.05)


def test_flat_series_is_degenerate():
    t=np.linspace(0.0, 1.0, 50)
    result=fit_exponential(TimeSeries(time=t, values=np.full(50, 3.0)))
    assert result.flags==["degenerate"]
    assert math.isnan(result.tau)


def test_slow_decay_is_flagged():
    t=np.linspace(0.0, 5e-3, 501)
    result=fit_exponential(TimeSeries(time=t, values=1.0+np.exp(-t/10.0)))
    assert result.flags


def test_exponential_fit_input_checks():
    t=np.linspace(0.0, 1.0, 5)
    with pytest.raises(InputError):
        fit_exponential(TimeSeries(time=t, values=np.exp(-t)))
    t=np.linspace(0.0, 1.0, 50)
    with pytest.raises(InputError):
        fit_exponential(TimeSeries(time=t, values=np.exp(-t)), window=(0.5, 2.0))
    with pytest.raises(InputError):
        TimeSeries(time=t[::-1], values=np.exp(-t))
