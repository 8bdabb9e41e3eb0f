"""Device summary: the measured parameter record, derived quantities and pass/fail consistency checks."""

from dataclasses import dataclass
from typing import Any

from eotk.core.eo_model import (
    conversion_efficiency,
    gv_from_wavelength_tuning,
    infer_g0,
    operating_point_photons,
    predicted_g0,
    tuning_rate_approx,
    zero_point_voltage,
)
from eotk.core.quantities import (
    BCS_RATIO,
    CONSTANTS,
    RATE_COMPOSITION_RTOL,
    composed_rate,
    q_from_rate,
    to_hz,
)
from eotk.core.resonator import (
    cpw_kinetic_fraction,
    cpw_line_params,
    loaded_quarterwave_frequency,
    slot_circuit_analysis,
    spiral_resonance,
)
from eotk.core.scenario import Scenario
from eotk.core.superconductor import qp_lifetime
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

KINETIC_FRACTION_TOLERANCE=0.02
LOADED_FREQUENCY_TOLERANCE=0.10
GAP_RATIO_TOLERANCE=0.01


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    expected: float
    tolerance: float

    @property
    def status(self)->str:
        return "PASS" if self.passed else "FAIL"

    @property
    def line(self)->str:
        return f"{self.status} {self.name}: {self.value:.6g} vs {self.expected:.6g} (tolerance {self.tolerance:g})"

    def to_dict(self)->dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "line": self.line,
        }


def _relative_check(name: str, value: float, expected: float, tolerance: float)->Check:
    return Check(name, abs(value/expected-1.0)<=tolerance, value, expected, tolerance)


def _absolute_check(name: str, value: float, expected: float, tolerance: float)->Check:
    return Check(name, abs(value-expected)<=tolerance, value, expected, tolerance)


def consistency_checks(s: Scenario)->list[Check]:
    o, m=s.device.optical, s.device.microwave
    checks=[
        _relative_check(
            "optical_rate_composition",
            to_hz(o.kappa_tot),
            to_hz(composed_rate(o.kappa_i, o.kappa_e, o.coupling_topology)),
            RATE_COMPOSITION_RTOL,
        ),
        _relative_check(
            "microwave_rate_composition",
            to_hz(m.gamma_tot),
            to_hz(composed_rate(m.gamma_i, m.gamma_e, m.coupling_topology)),
            RATE_COMPOSITION_RTOL,
        ),
        _relative_check(
            "gap_weak_coupling_ratio",
            s.film.Delta0,
            BCS_RATIO*CONSTANTS.kB*s.film.Tc,
            GAP_RATIO_TOLERANCE,
        ),
        _absolute_check(
            "cpw_kinetic_fraction",
            cpw_kinetic_fraction(s.cpw),
            s.alpha_k,
            KINETIC_FRACTION_TOLERANCE,
        ),
        _relative_check(
            "loaded_quarterwave_frequency",
            loaded_quarterwave_frequency(s.cpw, s.alpha_k),
            to_hz(m.omega_mw),
            LOADED_FREQUENCY_TOLERANCE,
        ),
    ]
    if s.reference_g0 is not None:
        checks.append(
            _relative_check(
                "g0_predicted",
                to_hz(predicted_g0(s.tuning, s.wavelength, s.device)),
                to_hz(s.reference_g0),
                s.reference_g0_tolerance,
            )
        )
    return checks


def _mode_record(frequency: float, intrinsic: float, external: float, total: float, topology: str, prefix: str)->dict[str, Any]:
    return {
        "frequency_hz": to_hz(frequency),
        f"{prefix}_i_hz": to_hz(intrinsic),
        f"{prefix}_e_hz": to_hz(external),
        f"{prefix}_tot_hz": to_hz(total),
        "coupling_topology": topology,
        "q_intrinsic": q_from_rate(to_hz(frequency), intrinsic),
        "q_loaded": q_from_rate(to_hz(frequency), total),
    }


def build_report(s: Scenario)->dict[str, Any]:
    """Full device record with derived quantities at the configured operating point.

    Returns:
        JSON-ready mapping; `checks` lists every consistency rule with its PASS/FAIL line
    """
    o, m=s.device.optical, s.device.microwave
    v_zpf=zero_point_voltage(m.omega_mw, s.device.impedance)
    g_v=gv_from_wavelength_tuning(s.tuning, s.wavelength)
    n_cav=operating_point_photons(s.device, s.pump_dbm, s.input_loss_db, s.pump_detuning)
    result=conversion_efficiency(s.device, n_cav, pump_detuning=s.pump_detuning)
    line=cpw_line_params(s.cpw)
    spiral=spiral_resonance(s.spiral)
    slot=slot_circuit_analysis(s.slot, s.resistivity)

    derived: dict[str, Any]={
        "v_zpf_v": v_zpf,
        "resonator_capacitance_f": 1.0/(m.omega_mw*s.device.impedance),
        "g_v_hz_per_v": to_hz(g_v),
        "g_v_polymer_estimate_hz_per_v": to_hz(tuning_rate_approx(s.polymer, o.omega_opt)),
        "g0_predicted_hz": to_hz(predicted_g0(s.tuning, s.wavelength, s.device)),
        "g0_used_hz": to_hz(result.g0),
        "g0_source": s.g0_source,
        "g0_uncertainty_hz": to_hz(result.g0_uncertainty),
        "pump_power_dbm": s.pump_dbm,
        "input_loss_db": s.input_loss_db,
        "pump_detuning_hz": to_hz(s.pump_detuning),
        "n_cav": n_cav,
        "cooperativity": result.cooperativity,
        "efficiency": result.efficiency,
        "efficiency_uncertainty": result.efficiency_uncertainty,
        "bandwidth_fwhm_hz": result.bandwidth_fwhm,
        "sideband_ratio_db": result.sideband_ratio_db,
    }
    if s.measured_efficiency is not None:
        derived["measured_efficiency"]=s.measured_efficiency
        derived["g0_inferred_hz"]=to_hz(infer_g0(s.measured_efficiency, s.device, n_cav))

    background=s.rate.background_density
    superconductor={
        "name": s.film.name,
        "tc_k": s.film.Tc,
        "delta0_uev": s.film.Delta0/CONSTANTS.e_charge*1e6,
        "sheet_inductance_fh": s.film.Ls_ref*1e15,
        "alpha_k": s.alpha_k,
        "background_density_per_um3": background,
        "tau_qp_background_s": qp_lifetime(s.film, background) if background>0 else None,
    }
    circuits={
        "cpw": {
            "l_per_m_h": line.L_per_m,
            "c_per_m_f": line.C_per_m,
            "z0_ohm": line.Z0,
            "kinetic_fraction": cpw_kinetic_fraction(s.cpw),
            "loaded_frequency_hz": loaded_quarterwave_frequency(s.cpw, s.alpha_k),
            "unloaded_frequency_hz": loaded_quarterwave_frequency(s.cpw.model_copy(update={"load_capacitance": 0.0}), 0.0),
        },
        "spiral": {
            "n_turns": s.spiral.n_turns,
            "inductance_h": spiral.inductance,
            "self_capacitance_f": spiral.self_capacitance,
            "srf_hz": spiral.srf,
            "impedance_ohm": spiral.impedance,
        },
        "slot": {
            "resistivity_ohm_m": s.resistivity,
            "q_mw": slot.q_mw,
            "f_3db_hz": slot.f_3db,
            "voltage_fraction": slot.voltage_fraction,
        },
    }

    checks=consistency_checks(s)
    for check in checks:
        logger.info("consistency check", name=check.name, status=check.status)
    return {
        "device": {
            "optical": _mode_record(o.omega_opt, o.kappa_i, o.kappa_e, o.kappa_tot, o.coupling_topology, "kappa"),
            "microwave": _mode_record(m.omega_mw, m.gamma_i, m.gamma_e, m.gamma_tot, m.coupling_topology, "gamma"),
            "impedance_ohm": s.device.impedance,
        },
        "derived": derived,
        "superconductor": superconductor,
        "circuits": circuits,
        "checks": [check.to_dict() for check in checks],
        "all_passed": all(check.passed for check in checks),
    }

