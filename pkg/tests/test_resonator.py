import math

import numpy as np
import pytest
from pydantic import ValidationError

from eotk.core.quantities import TWO_PI
from eotk.core.resonator import (
    AbsorptionTable,
    CpwGeometry,
    SpiralGeometry,
    cpw_geometry_factors,
    cpw_impedance,
    cpw_kinetic_fraction,
    cpw_line_params,
    etched_test_device,
    greenhouse_inductance,
    impedance_at_srf,
    loaded_quarterwave_frequency,
    optical_q_from_absorption,
    slot_circuit_analysis,
    spiral_inductance,
    spiral_resonance,
    strip_loaded_slot,
)
from eotk.exceptions import DomainError, OutOfRegimeError

MEASURED_CPW=CpwGeometry(L_per_m=620e-9, C_per_m=63e-12, load_capacitance=21e-15)


# ============== CPW ==============


def test_conformal_line_parameters_near_measured():
    line=cpw_line_params(CpwGeometry())
    assert line.L_per_m==pytest.approx(6.409e-7, rel=1e-3)
    assert line.C_per_m==pytest.approx(6.25e-11, rel=2e-3)
    assert line.L_per_m==pytest.approx(620e-9, rel=0.2)
    assert line.C_per_m==pytest.approx(63e-12, rel=0.2)
    assert line.Z0==pytest.approx(101.3, rel=1e-2)


def test_explicit_line_parameters_take_precedence():
    line=cpw_line_params(MEASURED_CPW)
    assert line.L_per_m==620e-9
    assert line.C_per_m==63e-12


def test_geometry_factors():
    g_c, g_g=cpw_geometry_factors(CpwGeometry())
    assert g_c==pytest.approx(1.957e5, rel=1e-3)
    assert g_g==pytest.approx(3.11e4, rel=5e-3)


def test_kinetic_fraction():
    assert cpw_kinetic_fraction(MEASURED_CPW)==pytest.approx(0.0487, rel=5e-3)
    assert cpw_kinetic_fraction(CpwGeometry())==pytest.approx(0.0472, rel=5e-3)
    assert cpw_kinetic_fraction(CpwGeometry(), sheet_inductance=0.0)==0.0


def test_capacitive_loading_lowers_the_quarter_wave():
    unloaded=loaded_quarterwave_frequency(MEASURED_CPW.model_copy(update={"load_capacitance": 0.0}))
    loaded=loaded_quarterwave_frequency(MEASURED_CPW, alpha_k=0.05)
    assert unloaded==pytest.approx(7.6926e9, rel=1e-4)
    assert loaded==pytest.approx(7.047e9, rel=1e-3)
    assert loaded==pytest.approx(6.672e9, rel=0.10)


def test_kinetic_inductance_raises_impedance():
    assert cpw_impedance(MEASURED_CPW, 0.05)>cpw_impedance(MEASURED_CPW)


def test_alpha_k_range():
    with pytest.raises(DomainError):
        loaded_quarterwave_frequency(MEASURED_CPW, alpha_k=1.0)


# ============== Spiral ==============


def test_reference_spiral():
    spiral=SpiralGeometry()
    resonance=spiral_resonance(spiral)
    assert spiral.inner_diameter==pytest.approx(47.5e-6)
    assert resonance.inductance==pytest.approx(7.90e-8, rel=1e-2)
    assert resonance.impedance==pytest.approx(1200.0, rel=1e-9)
    assert resonance.srf==pytest.approx(1.0/(2*math.pi*math.sqrt(resonance.inductance*resonance.self_capacitance)))


@pytest.mark.parametrize("n_turns", [5, 8, 10, 12, 16, 20, 24, 27, 33, 40])
@pytest.mark.parametrize("pitch", [1e-6, 0.5e-6])
def test_current_sheet_matches_segment_sum(n_turns, pitch):
    spiral=SpiralGeometry(n_turns=n_turns, wire_pitch=pitch)
    assert spiral_inductance(spiral)==pytest.approx(greenhouse_inductance(spiral), rel=0.08)


def test_winding_must_fit():
    with pytest.raises(ValidationError):
        SpiralGeometry(n_turns=60, wire_pitch=1e-6)


def test_sizing_to_a_target_srf():
    geometry, resonance=impedance_at_srf(27, 1e-6, 6.672e9)
    assert resonance.srf==pytest.approx(6.672e9, rel=1e-8)
    assert geometry.outer_diameter<100e-6
    _, fewer=impedance_at_srf(10, 1e-6, 6.672e9)
    assert fewer.impedance<resonance.impedance


def test_finer_pitch_raises_impedance_at_equal_srf():
    fine_geometry, fine=impedance_at_srf(27, 0.5e-6, 6.672e9)
    _, coarse=impedance_at_srf(27, 1e-6, 6.672e9)
    assert fine.srf==pytest.approx(coarse.srf, rel=1e-8)
    assert fine.impedance>coarse.impedance
    assert fine_geometry.wire_pitch==0.5e-6


def test_unreachable_srf():
    with pytest.raises(OutOfRegimeError):
        impedance_at_srf(200, 1e-6, 6.672e9)


# ============== Slot Circuit ==============


def test_etched_device_rc_rolloff():
    response=slot_circuit_analysis(etched_test_device(), 0.125)
    assert response.f_3db==pytest.approx(25.88e3, rel=1e-3)
    assert response.voltage_fraction<1e-3


def test_lossless_slab():
    response=slot_circuit_analysis(strip_loaded_slot(), 0.0)
    assert response.q_mw==math.inf
    assert response.f_3db==math.inf
    assert response.voltage_fraction==1.0


def test_strip_loading_beats_etched_slot():
    strip=slot_circuit_analysis(strip_loaded_slot(), 0.125)
    etched=slot_circuit_analysis(etched_test_device(), 0.125)
    assert strip.f_3db>etched.f_3db
    assert strip.voltage_fraction>etched.voltage_fraction


def test_negative_resistivity_rejected():
    with pytest.raises(DomainError):
        slot_circuit_analysis(strip_loaded_slot(), -1.0)


def test_slot_q_is_u_shaped_in_resistivity():
    circuit=strip_loaded_slot()
    rho=np.logspace(-7, 4, 45)
    q=np.array([slot_circuit_analysis(circuit, value).q_mw for value in rho])
    best=int(np.argmin(q))
    assert 0<best<rho.size-1
    assert np.all(np.diff(q[:best+1])<0)
    assert np.all(np.diff(q[best:])>0)
    assert q[0]>1e3 and q[-1]>1e3
    assert np.all(q[(rho>=1e-4)&(rho<=1.0)]<1e3)
    x=TWO_PI*circuit.analysis_frequency*circuit.slab_resistance(rho[best])*circuit.slot_capacitance
    assert 0.5<x<2.5


def test_optical_q_from_absorption_table():
    table=AbsorptionTable(resistivity=[1e-3, 1e-1, 10.0], absorption=[1e3, 10.0, 0.1])
    q_low=optical_q_from_absorption(table, 1e-3)
    q_mid=optical_q_from_absorption(table, 1e-2)
    q_high=optical_q_from_absorption(table, 10.0)
    assert q_low<q_mid<q_high
    assert q_low==pytest.approx(2*math.pi*4.0/(1557.92e-9*0.65*1e3))


def test_absorption_table_must_be_increasing():
    with pytest.raises(ValidationError):
        AbsorptionTable(resistivity=[1.0, 0.5], absorption=[1.0, 2.0])
