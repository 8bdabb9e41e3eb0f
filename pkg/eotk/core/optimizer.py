"""Seeded multi-start coordinate ascent over a bounded parameter box."""

import math
from dataclasses import dataclass, replace
from typing import Any, Callable

import numpy as np
from scipy.optimize import minimize_scalar

from eotk.core.eo_model import conversion_efficiency, efficiency_vs_pump_power, operating_point_photons, predicted_g0
from eotk.core.quantities import MicrowaveMode, OpticalMode, dbm_to_watts, from_hz, to_hz
from eotk.core.resonator import impedance_at_srf
from eotk.core.scenario import OptimizeSpec, Scenario
from eotk.exceptions import ConfigError, EotkError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)

# box keys understood by each objective; integer-valued keys are scanned exhaustively
PARAMETERS: dict[str, tuple[str, ...]]={
    "max_eta": ("impedance_ohm", "pump_power_dbm", "gamma_e_hz", "kappa_e_hz"),
    "max_impedance_at_srf": ("n_turns", "wire_pitch_um"),
}
INTEGER_PARAMETERS=frozenset({"n_turns"})
MAX_INTEGER_SCAN=400


# ============== Objectives ==============


def apply_eta_parameters(s: Scenario, x: dict[str, float])->Scenario:
    """Scenario with the max_eta box coordinates substituted."""
    device=s.device
    pump_dbm=x.get("pump_power_dbm", s.pump_dbm)
    if "kappa_e_hz" in x:
        o=device.optical
        device=device.model_copy(update={"optical": OpticalMode(
            omega_opt=o.omega_opt,
            kappa_i=o.kappa_i,
            kappa_e=from_hz(x["kappa_e_hz"]),
            coupling_topology=o.coupling_topology,
        )})
    if "gamma_e_hz" in x:
        m=device.microwave
        device=device.with_microwave(MicrowaveMode(
            omega_mw=m.omega_mw,
            gamma_i=m.gamma_i,
            gamma_e=from_hz(x["gamma_e_hz"]),
            coupling_topology=m.coupling_topology,
        ))
    if "impedance_ohm" in x:
        z=x["impedance_ohm"]
        if s.g0_source=="predicted":
            device=device.model_copy(update={"impedance": z})
            device=device.with_g0(predicted_g0(s.tuning, s.wavelength, device), device.g0_uncertainty)
        else:
            # g0 scales with V_zpf, i.e. with sqrt(Z)
            scale=math.sqrt(z/device.impedance)
            device=device.model_copy(update={"impedance": z}).with_g0(device.g0*scale, device.g0_uncertainty*scale)
    return replace(s, device=device, pump_dbm=pump_dbm)


def eta_objective(s: Scenario, x: dict[str, float])->float:
    """Heated efficiency at the box point; a point that heats the film out of the model range scores zero."""
    candidate=apply_eta_parameters(s, x)
    power=dbm_to_watts(candidate.pump_dbm-candidate.input_loss_db)
    try:
        rows=efficiency_vs_pump_power(candidate.device, [power], candidate.stray_light, candidate.pump_detuning)
    except EotkError:
        return 0.0
    return rows[0].efficiency


def _spiral_kwargs(s: Scenario, x: dict[str, float])->dict[str, Any]:
    return {
        "n_turns": int(round(x.get("n_turns", s.spiral.n_turns))),
        "wire_pitch": x.get("wire_pitch_um", s.spiral.wire_pitch*1e6)*1e-6,
        "target_srf": s.optimize.target_srf if s.optimize else to_hz(s.device.microwave.omega_mw),
        "fill_factor": s.spiral.fill_factor,
        "cladding_permittivity": s.spiral.cladding_permittivity,
        "substrate_permittivity": s.spiral.substrate_permittivity,
    }


def impedance_objective(s: Scenario, x: dict[str, float])->float:
    """Spiral impedance at the target SRF; an infeasible winding scores zero."""
    try:
        return impedance_at_srf(**_spiral_kwargs(s, x))[1].impedance
    except EotkError:
        return 0.0


OBJECTIVES: dict[str, Callable[[Scenario, dict[str, float]], float]]={
    "max_eta": eta_objective,
    "max_impedance_at_srf": impedance_objective,
}


# ============== Search ==============


@dataclass(frozen=True)
class StartResult:
    start: dict[str, float]
    argmax: dict[str, float]
    value: float
    rounds: int


def validate_box(objective: str, box: dict[str, tuple[float, float]])->None:
    """Raises ConfigError for an unknown objective, an empty box, unknown keys or unbounded ranges."""
    if objective not in PARAMETERS:
        raise ConfigError(f"unknown objective {objective!r}", path="optimize.objective")
    if not box:
        raise ConfigError("parameter box is empty", path="optimize.box")
    for name, bounds in box.items():
        if name not in PARAMETERS[objective]:
            raise ConfigError(
                f"{name!r} is not a parameter of {objective}; expected one of {list(PARAMETERS[objective])}",
                path=f"optimize.box.{name}",
            )
        lo, hi=bounds
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo<hi:
            raise ConfigError(f"bounds must be finite with lower < upper, got {bounds}", path=f"optimize.box.{name}")


def _line_search(f: Callable[[float], float], lo: float, hi: float, integer: bool, tolerance: float)->tuple[float, float]:
    """Best (value, objective) along one coordinate; bounds are always candidates."""
    if integer:
        first, last=math.ceil(lo), math.floor(hi)
        if last-first<=MAX_INTEGER_SCAN:
            candidates=[float(v) for v in range(first, last+1)]
            scores=[f(v) for v in candidates]
            best=int(np.argmax(scores))
            return candidates[best], scores[best]
    # bounded Brent minimisation, i.e. golden-section steps with parabolic acceleration
    result=minimize_scalar(lambda v: -f(round(v) if integer else v), bounds=(lo, hi), method="bounded", options={"xatol": tolerance*(hi-lo)})
    candidates=[float(round(result.x)) if integer else float(result.x), lo, hi]
    scores=[f(v) for v in candidates]
    best=int(np.argmax(scores))
    return candidates[best], scores[best]


def coordinate_ascent(
    f: Callable[[dict[str, float]], float],
    box: dict[str, tuple[float, float]],
    start: dict[str, float],
    max_rounds: int = 20,
    tolerance: float = 1e-6,
)->StartResult:
    x=dict(start)
    value=f(x)
    rounds=0
    for rounds in range(1, max_rounds+1):
        previous=value
        # sorted keys keep the coordinate order independent of the config's key order
        for name in sorted(box):
            lo, hi=box[name]
            candidate, score=_line_search(
                lambda v, name=name: f({**x, name: v}),
                lo,
                hi,
                name in INTEGER_PARAMETERS,
                tolerance,
            )
            if score>value:
                x[name]=candidate
                value=score
        if value-previous<=tolerance*max(abs(value), 1e-300):
            break
    return StartResult(start=dict(start), argmax=x, value=value, rounds=rounds)


def _start_points(box: dict[str, tuple[float, float]], starts: int, seed: int)->list[dict[str, float]]:
    rng=np.random.default_rng(seed)
    points=[]
    for _ in range(starts):
        point={}
        for name in sorted(box):
            lo, hi=box[name]
            value=float(rng.uniform(lo, hi))
            point[name]=float(round(value)) if name in INTEGER_PARAMETERS else value
        points.append(point)
    return points


def _optimum_record(s: Scenario, objective: str, x: dict[str, float])->dict[str, Any]:
    if objective=="max_eta":
        candidate=apply_eta_parameters(s, x)
        n_cav=operating_point_photons(candidate.device, candidate.pump_dbm, candidate.input_loss_db, candidate.pump_detuning)
        result=conversion_efficiency(candidate.device, n_cav, pump_detuning=candidate.pump_detuning)
        return {
            "g0_hz": to_hz(result.g0),
            "n_cav": n_cav,
            "cooperativity": result.cooperativity,
            "efficiency_without_heating": result.efficiency,
            "efficiency": eta_objective(s, x),
            "impedance_ohm": candidate.device.impedance,
        }
    try:
        geometry, resonance=impedance_at_srf(**_spiral_kwargs(s, x))
    except EotkError as exc:
        return {"error": exc.message}
    return {
        "n_turns": geometry.n_turns,
        "wire_pitch_um": geometry.wire_pitch*1e6,
        "outer_diameter_um": geometry.outer_diameter*1e6,
        "inductance_h": resonance.inductance,
        "self_capacitance_f": resonance.self_capacitance,
        "srf_hz": resonance.srf,
        "impedance_ohm": resonance.impedance,
    }


def optimize(s: Scenario, spec: OptimizeSpec | None = None, seed: int = 0, starts: int = 5)->dict[str, Any]:
    """Maximise the declared objective over the box from `starts` seeded random starts.

    Returns:
        JSON-ready record with the argmax, objective value, every start and the model values at the optimum
    """
    spec=spec or s.optimize
    if spec is None:
        raise ConfigError("no optimize block declared", path="optimize")
    validate_box(spec.objective, spec.box)
    n_starts=spec.starts or starts
    if n_starts<1:
        raise ConfigError(f"need at least one start, got {n_starts}", path="optimize.starts")
    objective=OBJECTIVES[spec.objective]
    logger.info("optimization started", objective=spec.objective, starts=n_starts, seed=seed)

    results=[
        coordinate_ascent(lambda x: objective(s, x), spec.box, start, spec.max_rounds, spec.tolerance)
        for start in _start_points(spec.box, n_starts, seed)
    ]
    best=max(results, key=lambda r: r.value)
    logger.info("optimization finished", objective=spec.objective, value=best.value)
    return {
        "objective": spec.objective,
        "seed": seed,
        "starts": n_starts,
        "box": {name: list(bounds) for name, bounds in sorted(spec.box.items())},
        "argmax": best.argmax,
        "value": best.value,
        "runs": [
            {"start": r.start, "argmax": r.argmax, "value": r.value, "rounds": r.rounds}
            for r in results
        ],
        "at_optimum": _optimum_record(s, spec.objective, best.argmax),
    }
