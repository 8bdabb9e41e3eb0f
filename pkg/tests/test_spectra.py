import math

import numpy as np
import pytest

from eotk.core.quantities import TWO_PI, dbm_to_watts, photon_flux
from eotk.core.spectra import (
    FanoLorentzian,
    Spectrum,
    calibrate_efficiency,
    eval_lineshape,
    fit,
    fit_split_resonance,
    synthesize_heterodyne,
    synthesize_stroboscopic,
    tuning_from_splittings,
)
from eotk.exceptions import DomainError, InputError

OPTICAL=FanoLorentzian(f0=192.6e12, kappa_i=2.07e9, kappa_e=7.61e9, fano_phase=0.2)
MICROWAVE=FanoLorentzian(f0=6.672e9, kappa_i=2.53e6, kappa_e=1.91e6, external_ports=2)

RF_POWER=dbm_to_watts(-31.0)
OMEGA_MW=TWO_PI*6.672e9


def _grid(m: FanoLorentzian, linewidths: float = 5.0, points: int = 401)->np.ndarray:
    return np.linspace(m.f0-linewidths*m.kappa_tot, m.f0+linewidths*m.kappa_tot, points)


# ============== Spectrum ==============


def test_spectrum_validates_its_grid():
    with pytest.raises(InputError):
        Spectrum(frequency=[1.0, 1.0, 2.0], psd=[1.0, 1.0, 1.0])
    with pytest.raises(InputError):
        Spectrum(frequency=[1.0, 2.0], psd=[1.0, -1.0])
    with pytest.raises(InputError):
        Spectrum(frequency=[1.0, 2.0], psd=[1.0])


def test_lineshape_depth_on_resonance():
    m=FanoLorentzian(f0=1e9, kappa_i=0.4e6, kappa_e=0.6e6)
    s=eval_lineshape(m, np.array([1e9]))
    assert s.psd[0]==pytest.approx((1.0-2.0*0.6)**2)
    assert m.kappa_tot==pytest.approx(1e6)
    assert m.q_intrinsic==pytest.approx(2500.0)


def test_two_port_total_width():
    assert MICROWAVE.kappa_tot==pytest.approx(6.35e6)


@pytest.mark.parametrize("kappa_e", [1.91e6, 10e6, 50e6])
def test_side_coupled_transmission_on_resonance(kappa_e):
    m=MICROWAVE.model_copy(update={"kappa_e": kappa_e})
    s=eval_lineshape(m, np.array([m.f0]), kind="microwave_s21")
    assert s.psd[0]==pytest.approx((m.kappa_i/m.kappa_tot)**2, rel=1e-12)


def test_side_coupled_dip_deepens_with_coupling():
    depths=[
        eval_lineshape(MICROWAVE.model_copy(update={"kappa_e": kappa_e}), np.array([MICROWAVE.f0])).psd[0]
        for kappa_e in (0.5e6, 1.91e6, 10e6, 50e6)
    ]
    assert all(later<earlier for earlier, later in zip(depths, depths[1:]))
    assert depths[0]==pytest.approx((2.53/3.53)**2)


# ============== Fitting ==============


def test_optical_fit_recovers_parameters():
    result=fit(eval_lineshape(OPTICAL, _grid(OPTICAL)), coupling="over")
    m=result.model
    assert result.ok
    assert result.coupling=="over"
    assert m.f0==pytest.approx(OPTICAL.f0, abs=1e-3*OPTICAL.kappa_tot)
    assert m.kappa_i==pytest.approx(2.07e9, rel=1e-3)
    assert m.kappa_e==pytest.approx(7.61e9, rel=1e-3)
    assert m.fano_phase==pytest.approx(0.2, abs=1e-3)
    assert m.q_intrinsic==pytest.approx(93_100, rel=0.01)


def test_microwave_two_port_fit():
    result=fit(eval_lineshape(MICROWAVE, _grid(MICROWAVE), kind="microwave_s21"), coupling="over", external_ports=2)
    assert result.model.kappa_i==pytest.approx(2.53e6, rel=1e-3)
    assert result.model.kappa_e==pytest.approx(1.91e6, rel=1e-3)
    assert result.model.kappa_tot==pytest.approx(6.35e6, rel=1e-3)


def test_fit_with_noise_reports_uncertainties(rng):
    clean=eval_lineshape(OPTICAL, _grid(OPTICAL))
    noisy=Spectrum(frequency=clean.frequency, psd=np.clip(clean.psd*(1.0+0.005*rng.standard_normal(len(clean))), 0.0, None))
    result=fit(noisy, coupling="over")
    assert result.model.kappa_tot==pytest.approx(9.68e9, rel=0.02)
    assert result.stderr["kappa_i"]>0
    assert result.residual_norm>0


def test_fit_scatter_over_noisy_trials():
    rng=np.random.default_rng(2024)
    clean=eval_lineshape(OPTICAL, _grid(OPTICAL, points=801))
    widths, covered=[], 0
    for _ in range(200):
        noisy=Spectrum(frequency=clean.frequency, psd=np.clip(clean.psd*(1.0+0.02*rng.standard_normal(len(clean))), 0.0, None))
        result=fit(noisy, coupling="over")
        widths.append(result.model.kappa_tot)
        if abs(result.model.kappa_i-OPTICAL.kappa_i)<=result.stderr["kappa_i"]:
            covered+=1
    widths=np.array(widths)/OPTICAL.kappa_tot
    assert abs(widths.mean()-1.0)<0.01
    assert widths.std(ddof=1)<0.03
    # one-sigma errors should cover the truth about two times in three
    assert covered>=120


def test_fit_round_trip_over_random_models():
    rng=np.random.default_rng(99)
    for _ in range(50):
        kappa=rng.uniform(1e5, 1e7)
        rho=rng.uniform(0.2, 0.45) if rng.random()<0.5 else rng.uniform(0.55, 0.9)
        ports=int(rng.choice([1, 2]))
        truth=FanoLorentzian(
            f0=rng.uniform(1e9, 1e10),
            kappa_i=(1.0-rho)*kappa,
            kappa_e=rho*kappa/ports,
            fano_phase=rng.uniform(-0.3, 0.3),
            external_ports=ports,
        )
        regime="over" if rho>0.5 else "under"
        result=fit(eval_lineshape(truth, _grid(truth)), coupling=regime, external_ports=ports)
        m=result.model
        assert m.kappa_i==pytest.approx(truth.kappa_i, rel=1e-3)
        assert m.kappa_e==pytest.approx(truth.kappa_e, rel=1e-3)
        assert m.f0==pytest.approx(truth.f0, abs=1e-3*kappa)


def test_fit_needs_enough_points():
    with pytest.raises(InputError):
        fit(eval_lineshape(OPTICAL, _grid(OPTICAL, points=10)))


def test_fit_needs_a_wide_enough_span():
    with pytest.raises(InputError):
        fit(eval_lineshape(OPTICAL, _grid(OPTICAL, linewidths=0.5)))


# ============== Heterodyne Calibration ==============


def _calibration_pair(flux: float, noise: float = 0.0, seed: int = 0):
    frequency=np.linspace(19e6, 21e6, 2001)
    return synthesize_heterodyne([(20e6, flux)], frequency, lo_shot_psd=1e-17, rbw=10e3, dark=2e-17, noise=noise, seed=seed)


def test_calibration_recovers_efficiency():
    incident=photon_flux(RF_POWER, OMEGA_MW)
    signal, dark=_calibration_pair(2.2e-9*incident)
    result=calibrate_efficiency(signal, dark, (19.9e6, 20.1e6), RF_POWER, OMEGA_MW)
    assert result.incident_flux==pytest.approx(1.797e17, rel=1e-3)
    assert result.shot_noise_psd==pytest.approx(1e-17, rel=1e-9)
    assert result.efficiency==pytest.approx(2.2e-9, rel=1e-3)
    assert result.efficiency_systematic==pytest.approx(0.32*result.efficiency)
    assert result.reference_bands==[(19.7e6, 19.9e6), (20.1e6, 20.3e6)]
    assert result.flags==[]


def test_calibration_with_noise_stays_close():
    incident=photon_flux(RF_POWER, OMEGA_MW)
    signal, dark=_calibration_pair(2.2e-9*incident, noise=0.01, seed=7)
    result=calibrate_efficiency(signal, dark, (19.9e6, 20.1e6), RF_POWER, OMEGA_MW)
    assert result.efficiency==pytest.approx(2.2e-9, rel=0.1)
    assert result.efficiency_uncertainty>0


def test_synthesis_is_seeded():
    first, _=_calibration_pair(1e8, noise=0.01, seed=3)
    second, _=_calibration_pair(1e8, noise=0.01, seed=3)
    other, _=_calibration_pair(1e8, noise=0.01, seed=4)
    np.testing.assert_array_equal(first.psd, second.psd)
    assert not np.array_equal(first.psd, other.psd)


def test_sideband_ratio_from_two_windows():
    frequency=np.arange(15e6, 35e6+1.0, 1e3)
    ratio=10.0**(9.345/10.0)
    signal, dark=synthesize_heterodyne([(20e6, ratio*1e8), (30e6, 1e8)], frequency, 1e-17, 10e3)
    anti_stokes=calibrate_efficiency(signal, dark, (19.9e6, 20.1e6), RF_POWER, OMEGA_MW)
    stokes=calibrate_efficiency(signal, dark, (29.9e6, 30.1e6), RF_POWER, OMEGA_MW)
    measured=10.0*math.log10(anti_stokes.sideband_flux/stokes.sideband_flux)
    assert measured==pytest.approx(9.345, abs=1e-2)


def test_missing_shot_noise_reference_is_flagged():
    signal, _=_calibration_pair(1e8)
    result=calibrate_efficiency(signal, signal, (19.9e6, 20.1e6), RF_POWER, OMEGA_MW)
    assert "no_shot_noise_reference" in result.flags
    assert "consistent_with_zero" in result.flags
    assert result.efficiency==0.0


def test_calibration_window_needs_room_for_reference_bands():
    signal, dark=_calibration_pair(1e8)
    with pytest.raises(InputError):
        calibrate_efficiency(signal, dark, (19.05e6, 20.95e6), RF_POWER, OMEGA_MW)
    with pytest.raises(InputError):
        calibrate_efficiency(signal, dark, (20.1e6, 19.9e6), RF_POWER, OMEGA_MW)


def test_calibration_needs_matching_grids():
    signal, _=_calibration_pair(1e8)
    other=Spectrum(frequency=np.linspace(19e6, 21e6, 1001), psd=np.full(1001, 2e-17))
    with pytest.raises(InputError):
        calibrate_efficiency(signal, other, (19.9e6, 20.1e6), RF_POWER, OMEGA_MW)


def test_duplicate_sidebands_rejected():
    with pytest.raises(DomainError):
        synthesize_heterodyne([(20e6, 1.0), (20e6, 2.0)], np.linspace(19e6, 21e6, 101), 1e-17, 1e4)


# ============== Stroboscopic Tuning ==============


def test_split_resonance_fit():
    m=FanoLorentzian(f0=1e9, kappa_i=0.4e6, kappa_e=0.6e6)
    frequency=np.linspace(1e9-8e6, 1e9+8e6, 801)
    result=fit_split_resonance(synthesize_stroboscopic(m, 0.6e6, frequency))
    assert result.splitting==pytest.approx(0.6e6, rel=1e-3)
    assert result.kappa_tot==pytest.approx(1e6, rel=1e-3)


def test_tuning_from_linear_splittings():
    vpp=np.array([10.0, 20.0, 30.0, 40.0])
    per_volt=299792458.0*1.1e-12/1557.92e-9**2
    result=tuning_from_splittings(vpp, per_volt*vpp, 1557.92e-9)
    assert result.tuning_pm_per_volt==pytest.approx(1.1, rel=1e-9)
    assert result.rvalue==pytest.approx(1.0)


def test_tuning_regression_needs_three_points():
    with pytest.raises(InputError):
        tuning_from_splittings(np.array([1.0, 2.0]), np.array([1.0, 2.0]), 1557.92e-9)
