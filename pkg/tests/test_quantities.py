import math

import pytest
from pydantic import ValidationError

from eotk.core.quantities import (
    TWO_PI,
    MicrowaveMode,
    OpticalMode,
    Quantity,
    SuperconductorParams,
    composed_rate,
    convert,
    dbm_to_watts,
    from_hz,
    measured_device,
    photon_flux,
    q_from_rate,
    rate_from_q,
    to_hz,
    watts_to_dbm,
)
from eotk.exceptions import DomainError


# ============== Conversions ==============


def test_dbm_levels():
    assert dbm_to_watts(0.0)==pytest.approx(1e-3)
    assert dbm_to_watts(-26.0)==pytest.approx(2.512e-6, rel=1e-3)
    assert watts_to_dbm(1e-6)==pytest.approx(-30.0)


@pytest.mark.parametrize("power", [0.0, -1e-6])
def test_watts_to_dbm_rejects_non_positive(power):
    with pytest.raises(DomainError):
        watts_to_dbm(power)


def test_rate_and_quality_factor_are_inverse():
    rate=rate_from_q(192.6e12, 19900)
    assert to_hz(rate)==pytest.approx(9.68e9, rel=1e-3)
    assert q_from_rate(192.6e12, rate)==pytest.approx(19900)


def test_zero_rate_is_infinite_q():
    assert q_from_rate(6.672e9, 0.0)==math.inf


def test_photon_flux_of_one_microwatt_pump():
    assert photon_flux(1e-6, TWO_PI*192.6e12)==pytest.approx(7.836e12, rel=1e-3)


def test_microwave_photon_flux_at_rf_drive():
    assert photon_flux(dbm_to_watts(-31.0), TWO_PI*6.672e9)==pytest.approx(1.797e17, rel=1e-3)


def test_convert_tagged_quantities():
    assert convert(Quantity(6.672, "GHz"), "rad/s")==pytest.approx(TWO_PI*6.672e9)
    assert convert(Quantity(1.0, "GHz"), "MHz")==pytest.approx(1e3)
    assert convert(Quantity(-30.0, "dBm"), "uW")==pytest.approx(1.0)
    assert convert(Quantity(140.0, "fH/sq"), "pH/sq")==pytest.approx(0.14)


def test_convert_rejects_mixed_dimensions():
    with pytest.raises(DomainError):
        convert(Quantity(1.0, "GHz"), "W")
    with pytest.raises(DomainError):
        convert(Quantity(1.0, "furlong"), "m")


def test_hz_helpers_round_trip():
    assert to_hz(from_hz(330.0))==pytest.approx(330.0)


# ============== Parameter Records ==============


def test_composition_by_topology():
    assert composed_rate(1.0, 2.0, "single-sided")==3.0
    assert composed_rate(1.0, 2.0, "two-sided")==5.0


def test_total_rate_derived_when_omitted():
    optical=OpticalMode(omega_opt=Quantity(192.6, "THz"), kappa_i=Quantity(2.07, "GHz"), kappa_e=Quantity(7.61, "GHz"))
    assert to_hz(optical.kappa_tot)==pytest.approx(9.68e9)
    microwave=MicrowaveMode(omega_mw=Quantity(6.672, "GHz"), gamma_i=Quantity(2.53, "MHz"), gamma_e=Quantity(1.91, "MHz"))
    assert to_hz(microwave.gamma_tot)==pytest.approx(6.35e6)


def test_inconsistent_total_rate_rejected():
    with pytest.raises(ValidationError):
        OpticalMode(
            omega_opt=Quantity(192.6, "THz"),
            kappa_i=Quantity(2.07, "GHz"),
            kappa_e=Quantity(7.61, "GHz"),
            kappa_tot=Quantity(9.0, "GHz"),
        )
    with pytest.raises(ValidationError):
        MicrowaveMode(
            omega_mw=Quantity(6.672, "GHz"),
            gamma_i=Quantity(2.53, "MHz"),
            gamma_e=Quantity(1.91, "MHz"),
            gamma_tot=Quantity(4.44, "MHz"),
        )


def test_measured_device_record():
    dev=measured_device()
    assert to_hz(dev.optical.omega_opt)==pytest.approx(192.6e12)
    assert to_hz(dev.microwave.gamma_tot)==pytest.approx(6.35e6)
    assert dev.microwave.coupling_topology=="two-sided"
    assert to_hz(dev.g0)==pytest.approx(330.0)
    assert to_hz(dev.g0_uncertainty)==pytest.approx(60.0)
    assert measured_device(g0_hz=None).g0 is None


def test_with_g0_returns_a_copy(device):
    updated=device.with_g0(from_hz(400.0))
    assert to_hz(updated.g0)==pytest.approx(400.0)
    assert to_hz(device.g0)==pytest.approx(330.0)


def test_film_gap_must_follow_weak_coupling(film):
    assert film.NV_coupling>0
    with pytest.raises(ValidationError):
        SuperconductorParams(**{**film.model_dump(), "Delta0": 1.3*film.Delta0, "NV_coupling": None})
