"""One-dimensional parameter sweeps producing plot-ready rows.

Each target maps a grid value to one row of derived columns. Model-range failures are
recorded in the row's `error` column and the sweep carries on.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable

import numpy as np

from eotk.core.eo_model import (
    efficiency_vs_pump_power,
    efficiency_vs_rf_detuning,
    efficiency_vs_rf_power,
    operating_point_photons,
    pump_wavelength_scan,
)
from eotk.core.quantities import (
    CONSTANTS,
    dbm_to_watts,
    from_hz,
    q_from_rate,
    to_hz,
)
from eotk.core.resonator import SpiralGeometry, slot_circuit_analysis, spiral_resonance
from eotk.core.scenario import SWEEP_UNITS, Scenario, SweepSpec
from eotk.core.superconductor import (
    gap_at_temperature,
    qp_density,
    qp_lifetime,
    resonator_response,
)
from eotk.exceptions import EotkError, InputError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

Row=dict[str, Any]


def _pump_power(s: Scenario, value: float)->Row:
    power=dbm_to_watts(value-s.input_loss_db)
    row=efficiency_vs_pump_power(s.device, [power], s.stray_light, s.pump_detuning)[0]
    return {
        "power_at_cavity_w": row.power,
        "n_cav": row.n_cav,
        "efficiency": row.efficiency,
        "gamma_tot_hz": to_hz(row.gamma_tot),
        "temperature_k": row.temperature,
    }


def _rf_detuning(s: Scenario, value: float)->Row:
    n_cav=operating_point_photons(s.device, s.pump_dbm, s.input_loss_db, s.pump_detuning)
    curve=efficiency_vs_rf_detuning(s.device, n_cav, np.array([from_hz(value)]))
    return {"efficiency": float(curve.efficiency[0]), "peak_efficiency": curve.peak_efficiency}


def _pump_wavelength(s: Scenario, value: float)->Row:
    power=dbm_to_watts(s.pump_dbm-s.input_loss_db)
    row=pump_wavelength_scan(s.device, power, np.array([value*1e-9]))[0]
    return {
        "detuning_hz": to_hz(row.detuning),
        "n_cav": row.n_cav,
        "anti_stokes_efficiency": row.anti_stokes_efficiency,
        "stokes_efficiency": row.stokes_efficiency,
        "sideband_ratio_db": row.sideband_ratio_db,
    }


def _temperature(s: Scenario, value: float)->Row:
    f0_cold=to_hz(s.device.microwave.omega_mw)
    response=resonator_response(s.film, s.alpha_k, f0_cold, value)
    density=qp_density(s.film, value)
    return {
        "gap_uev": gap_at_temperature(s.film, value).gap/CONSTANTS.e_charge*1e6,
        "n_qp_per_um3": density,
        "tau_qp_s": qp_lifetime(s.film, density) if density>0 else None,
        "f0_hz": response.f0,
        "frequency_shift_hz": response.f0-f0_cold,
        "q_qp": response.q_qp,
    }


def _optical_power(s: Scenario, value: float)->Row:
    m=s.device.microwave
    f0_cold=to_hz(m.omega_mw)
    absorbed=s.stray_light.absorbed_fraction*dbm_to_watts(value)
    if s.stray_light.enabled:
        temperature=s.stray_light.temperature(absorbed)
        heated=s.stray_light.heated_microwave(m, temperature)
    else:
        # film stays at the bath
        temperature, heated=s.stray_light.bath_temperature, m
    response=resonator_response(s.film, s.alpha_k, f0_cold, temperature)
    return {
        "absorbed_power_w": absorbed,
        "temperature_k": temperature,
        "f0_hz": response.f0,
        "frequency_shift_hz": response.f0-f0_cold,
        "q_intrinsic": q_from_rate(f0_cold, heated.gamma_i),
        "q_loaded": q_from_rate(f0_cold, heated.gamma_tot),
    }


def _turns(s: Scenario, value: float)->Row:
    if value!=round(value) or value<1:
        raise InputError(f"turn count must be a positive integer, got {value}")
    # validated again: the winding must still fit the outer diameter
    geometry=SpiralGeometry(**{**s.spiral.model_dump(), "n_turns": int(value)})
    resonance=spiral_resonance(geometry)
    return {
        "inductance_h": resonance.inductance,
        "self_capacitance_f": resonance.self_capacitance,
        "srf_hz": resonance.srf,
        "impedance_ohm": resonance.impedance,
    }


def _rf_power(s: Scenario, value: float)->Row:
    n_cav=operating_point_photons(s.device, s.pump_dbm, s.input_loss_db, s.pump_detuning)
    row=efficiency_vs_rf_power(s.device, n_cav, [dbm_to_watts(value)], s.stray_light)[0]
    return {
        "efficiency": row.efficiency,
        "gamma_tot_hz": to_hz(row.gamma_tot),
        "temperature_k": row.temperature,
        "dissipated_power_w": row.extra["dissipated_power"],
    }


def _resistivity(s: Scenario, value: float)->Row:
    response=slot_circuit_analysis(s.slot, value)
    return {
        "q_mw": response.q_mw,
        "f_3db_hz": response.f_3db,
        "voltage_fraction": response.voltage_fraction,
    }


_TARGETS: dict[str, tuple[Callable[[Scenario, float], Row], tuple[str, ...]]]={
    "pump_power": (_pump_power, ("power_at_cavity_w", "n_cav", "efficiency", "gamma_tot_hz", "temperature_k")),
    "rf_detuning": (_rf_detuning, ("efficiency", "peak_efficiency")),
    "pump_wavelength": (
        _pump_wavelength,
        ("detuning_hz", "n_cav", "anti_stokes_efficiency", "stokes_efficiency", "sideband_ratio_db"),
    ),
    "temperature": (_temperature, ("gap_uev", "n_qp_per_um3", "tau_qp_s", "f0_hz", "frequency_shift_hz", "q_qp")),
    "optical_power": (
        _optical_power,
        ("absorbed_power_w", "temperature_k", "f0_hz", "frequency_shift_hz", "q_intrinsic", "q_loaded"),
    ),
    "turns": (_turns, ("inductance_h", "self_capacitance_f", "srf_hz", "impedance_ohm")),
    "rf_power": (_rf_power, ("efficiency", "gamma_tot_hz", "temperature_k", "dissipated_power_w")),
    "resistivity": (_resistivity, ("q_mw", "f_3db_hz", "voltage_fraction")),
}


def sweep_columns(target: str)->tuple[str, ...]:
    """CSV header for a target: grid column, derived columns, then `error`."""
    if target not in _TARGETS:
        raise InputError(f"unknown sweep target {target!r}; expected one of {sorted(_TARGETS)}")
    return (f"{target}_{SWEEP_UNITS[target]}", *_TARGETS[target][1], "error")


def _evaluate(s: Scenario, target: str, value: float)->Row:
    function, columns=_TARGETS[target]
    grid_column=f"{target}_{SWEEP_UNITS[target]}"
    try:
        row=function(s, value)
        row["error"]=""
    except (EotkError, ValueError) as exc:
        message=exc.message if isinstance(exc, EotkError) else str(exc).splitlines()[0]
        logger.warning("sweep point failed", target=target, value=value, error=message)
        row={column: None for column in columns}
        row["error"]=f"{type(exc).__name__}: {message}"
    row[grid_column]=value
    return row


def run_sweep(s: Scenario, spec: SweepSpec | None = None, workers: int = 1)->tuple[tuple[str, ...], list[Row]]:
    """Evaluate every grid point of the sweep in grid order.

    Args:
        s: Scenario
        spec: Sweep target and grid; defaults to `s.sweep`
        workers: Concurrent evaluations; row order never depends on it

    Raises:
        InputError: no sweep declared, unknown target, empty grid
    """
    spec=spec or s.sweep
    if spec is None:
        raise InputError("no sweep declared in the configuration")
    columns=sweep_columns(spec.target)
    if not spec.values:
        raise InputError("sweep grid is empty")
    logger.info("sweep started", target=spec.target, points=len(spec.values), workers=workers)
    if workers>1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows=list(pool.map(lambda value: _evaluate(s, spec.target, value), spec.values))
    else:
        rows=[_evaluate(s, spec.target, value) for value in spec.values]
    failed=sum(1 for row in rows if row["error"])
    logger.info("sweep finished", target=spec.target, failed=failed)
    return columns, rows

