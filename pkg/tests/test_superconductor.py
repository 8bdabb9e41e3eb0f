import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import expit

from eotk.core.quantities import CONSTANTS, TWO_PI
from eotk.core.superconductor import (
    MATERIALS,
    T_FLOOR,
    complex_conductivity,
    film_from_preset,
    gap_at_temperature,
    invert_frequency_shift,
    london_sheet_inductance,
    material,
    penetration_depth,
    qp_density,
    qp_density_low_temperature,
    qp_lifetime,
    qp_temperature,
    recombination_constant,
    regime_edge_temperature,
    resonator_response,
    surface_impedance,
)
from eotk.exceptions import DegenerateInputError, DomainError, OutOfRegimeError

OMEGA_MW=TWO_PI*6.672e9


# ============== Gap ==============


def test_gap_at_zero_temperature_is_delta0(film):
    assert gap_at_temperature(film, 0.0).gap==pytest.approx(film.Delta0, rel=1e-9)


def test_gap_closes_towards_tc(film):
    low=gap_at_temperature(film, 0.3).gap
    high=gap_at_temperature(film, 1.0).gap
    assert low==pytest.approx(film.Delta0, rel=5e-3)
    assert 0<high<0.7*film.Delta0
    assert gap_at_temperature(film, 1.2).gap==0.0


def test_negative_temperature_rejected(film):
    with pytest.raises(DomainError):
        gap_at_temperature(film, -0.1)


def _gap_by_iteration(p, T: float)->float:
    """Delta <- Delta exp(I(Delta) - 1/NV) with I the energy-cutoff gap integral over xi."""
    debye=CONSTANTS.kB*p.debye_temperature/p.Delta0
    half_over_kt=p.Delta0/(2.0*CONSTANTS.kB*T)
    d=1.0
    for _ in range(200):
        integral, _=quad(
            lambda x: math.tanh(math.hypot(x, d)*half_over_kt)/math.hypot(x, d),
            0.0,
            math.sqrt(debye**2-d**2),
            points=[1.0, 10.0],
            epsabs=0.0,
            epsrel=1e-10,
            limit=200,
        )
        following=d*math.exp(integral-1.0/p.NV_coupling)
        if abs(following-d)<1e-11:
            break
        d=following
    return following*p.Delta0


def test_gap_matches_fixed_point_iteration(film):
    T=0.5*film.Tc
    assert gap_at_temperature(film, T).gap==pytest.approx(_gap_by_iteration(film, T), rel=1e-4)
    assert _gap_by_iteration(film, 1e-3)==pytest.approx(film.Delta0, rel=1e-6)


# ============== Conductivity ==============


def test_sigma2_low_temperature_limit(film):
    cond=complex_conductivity(film, OMEGA_MW, 0.0)
    photon=CONSTANTS.hbar*OMEGA_MW
    assert cond.sigma1==0.0
    assert cond.sigma2/film.sigma_n==pytest.approx(math.pi*film.Delta0/photon, rel=0.02)
    assert cond.sigma2/film.sigma_n==pytest.approx(19.01, rel=0.02)


def test_conductivity_grows_lossy_with_temperature(film):
    cold=complex_conductivity(film, OMEGA_MW, 0.15)
    warm=complex_conductivity(film, OMEGA_MW, 0.3)
    assert 0<cold.sigma1<warm.sigma1
    assert warm.sigma2<cold.sigma2


def test_pair_breaking_photon_is_out_of_regime(film):
    with pytest.raises(OutOfRegimeError):
        complex_conductivity(film, TWO_PI*100e9, 0.05)


def test_surface_impedance_is_inductive(film):
    cond=complex_conductivity(film, OMEGA_MW, 0.0)
    surface=surface_impedance(film, cond)
    assert surface.Rs==0.0
    assert surface.Ls>0
    assert 20e-9<penetration_depth(cond)<200e-9


def _fermi_reference(e: float, delta: float, T: float)->float:
    return float(expit(-e*delta/(CONSTANTS.kB*T)))


def _conductivity_reference(p, omega: float, T: float)->tuple[float, float, float]:
    """sigma1/sigma_n, sigma2/sigma_n and n_qp from the raw integrands in units of the gap.

    The inverse square-root edges are handled by algebraic quadrature weights.
    """
    delta=gap_at_temperature(p, T).gap
    w=CONSTANTS.hbar*omega/delta
    top=1.0+60.0*CONSTANTS.kB*T/delta
    options={"epsabs": 0.0, "epsrel": 1e-10, "limit": 200}

    def sigma1_part(e: float)->float:
        occupation=_fermi_reference(e, delta, T)-_fermi_reference(e+w, delta, T)
        return occupation*(e*e+1.0+w*e)/(math.sqrt(e+1.0)*math.sqrt((e+w)**2-1.0))

    def sigma2_part(e: float)->float:
        pair=1.0-2.0*_fermi_reference(e+w, delta, T)
        return pair*(e*e+1.0+w*e)/(math.sqrt(1.0+e)*math.sqrt(e+w+1.0))

    def density_part(e: float)->float:
        return e*_fermi_reference(e, delta, T)/math.sqrt(e+1.0)

    sigma1=2.0/w*quad(sigma1_part, 1.0, top, weight="alg", wvar=(-0.5, 0.0), **options)[0]
    sigma2=1.0/w*quad(sigma2_part, 1.0-w, 1.0, weight="alg", wvar=(-0.5, -0.5), **options)[0]
    density=4.0*p.N0*delta*quad(density_part, 1.0, top, weight="alg", wvar=(-0.5, 0.0), **options)[0]
    return sigma1, sigma2, density


def test_conductivity_matches_raw_integrands(film):
    rng=np.random.default_rng(20)
    for omega, T in zip(TWO_PI*rng.uniform(1e9, 20e9, 20), rng.uniform(0.12, 0.6, 20)):
        sigma1, sigma2, density=_conductivity_reference(film, omega, T)
        cond=complex_conductivity(film, omega, T)
        assert cond.sigma1/film.sigma_n==pytest.approx(sigma1, rel=1e-6)
        assert cond.sigma2/film.sigma_n==pytest.approx(sigma2, rel=1e-6)
        assert qp_density(film, T)==pytest.approx(density, rel=1e-6)


def test_cold_sheet_inductance_near_reference(film):
    surface=surface_impedance(film, complex_conductivity(film, OMEGA_MW, 0.0))
    assert surface.Ls==pytest.approx(140e-15, rel=0.5)


# ============== Quasiparticles ==============


def test_low_temperature_density_asymptote(film):
    exact=qp_density(film, 0.1)
    assert qp_density_low_temperature(film, 0.1)==pytest.approx(exact, rel=0.03)


def test_density_inverse(film):
    density=qp_density(film, 0.2)
    assert qp_temperature(film, density)==pytest.approx(0.2, rel=1e-6)
    assert qp_temperature(film, 0.0)==T_FLOOR


def test_density_above_tc_rejected(film):
    with pytest.raises(OutOfRegimeError):
        qp_temperature(film, 1e12)


def test_recombination_lifetime(film):
    assert recombination_constant(film)==pytest.approx(0.12028, rel=1e-3)
    assert qp_lifetime(film, 5e3)==pytest.approx(24.06e-6, rel=1e-3)


def test_lifetime_at_zero_density_needs_a_clamp(film):
    with pytest.raises(DegenerateInputError):
        qp_lifetime(film, 0.0)
    assert qp_lifetime(film, 0.0, clamp=True)==pytest.approx(3.5e-3)
    assert qp_lifetime(film, 1.0, clamp=1e-3)==pytest.approx(1e-3)


# ============== Resonator Shifts ==============


def test_resonance_moves_down_with_temperature(film):
    cold=resonator_response(film, 0.05, 6.672e9, 0.1)
    warm=resonator_response(film, 0.05, 6.672e9, 0.3)
    assert warm.f0<cold.f0<=6.672e9
    assert warm.q_qp<cold.q_qp


def test_frequency_shift_inversion(film):
    target=resonator_response(film, 0.05, 6.672e9, 0.25)
    state=invert_frequency_shift(film, 0.05, 6.672e9, target.f0)
    assert state.temperature==pytest.approx(0.25, rel=1e-5)
    assert state.density==pytest.approx(qp_density(film, 0.25), rel=1e-4)
    assert state.lifetime==pytest.approx(recombination_constant(film)/state.density)


def test_inversion_rejects_upward_shift(film):
    with pytest.raises(DomainError):
        invert_frequency_shift(film, 0.05, 6.672e9, 6.68e9)


def test_inversion_beyond_model_range(film):
    with pytest.raises(OutOfRegimeError):
        invert_frequency_shift(film, 0.05, 6.672e9, 1.0e7)


def test_regime_edge_below_tc(film):
    edge=regime_edge_temperature(film, OMEGA_MW)
    assert 0.9<edge<film.Tc


def test_large_shift_maps_to_a_warm_film(film):
    state=invert_frequency_shift(film, 0.05, 6.672e9, 6.672e9-33e6)
    assert 0.6<=state.temperature<=1.0


def test_small_shift_follows_the_kinetic_inductance(film):
    cold=surface_impedance(film, complex_conductivity(film, OMEGA_MW, 0.0)).Ls
    state=resonator_response(film, 0.05, 6.672e9, 0.3)
    delta=state.surface.Ls/cold-1.0
    shift=(state.f0-6.672e9)/6.672e9
    assert delta>0
    assert abs(shift+0.5*0.05*delta)<=(0.05*delta)**2


# ============== Materials ==============


def test_material_catalog():
    assert set(MATERIALS)>={"Al", "Nb", "TiN", "NbTiN"}
    assert material("TiN").Tc==pytest.approx(2.6)
    with pytest.raises(DomainError):
        material("Pb")


def test_london_sheet_inductance_thick_film_limit():
    # thick film: coth -> 1
    assert london_sheet_inductance(45e-9, 2e-6)==pytest.approx(CONSTANTS.mu0*45e-9, rel=1e-6)


def test_only_aluminum_has_a_full_record():
    assert film_from_preset("Al").name=="Al"
    with pytest.raises(DomainError):
        film_from_preset("Nb")
