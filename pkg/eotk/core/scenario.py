"""Domain-level bundle of everything one run needs, in SI units and angular rates."""

from dataclasses import dataclass, replace
from typing import Literal

from eotk.core.dynamics import PulseSchedule, RateModel, ResonatorProbe
from eotk.core.eo_model import PolymerParams, StrayLightModel
from eotk.core.quantities import DeviceParams, SuperconductorParams
from eotk.core.resonator import CpwGeometry, SlotCircuit, SpiralGeometry

SweepTarget=Literal[
    "pump_power",
    "rf_detuning",
    "pump_wavelength",
    "temperature",
    "optical_power",
    "turns",
    "rf_power",
    "resistivity",
]
Objective=Literal["max_eta", "max_impedance_at_srf"]

# grid unit of each sweep target, as written in the run configuration
SWEEP_UNITS: dict[str, str]={
    "pump_power": "dbm",
    "rf_detuning": "hz",
    "pump_wavelength": "nm",
    "temperature": "k",
    "optical_power": "dbm",
    "turns": "count",
    "rf_power": "dbm",
    "resistivity": "ohm_m",
}


@dataclass(frozen=True)
class SweepSpec:
    target: SweepTarget
    values: tuple[float, ...]


@dataclass(frozen=True)
class OptimizeSpec:
    objective: Objective
    box: dict[str, tuple[float, float]]
    starts: int | None = None
    max_rounds: int = 20
    tolerance: float = 1e-6
    target_srf: float = 6.672e9


@dataclass(frozen=True)
class Scenario:
    device: DeviceParams
    g0_source: Literal["configured", "predicted"]
    tuning: float
    wavelength: float
    pump_dbm: float
    input_loss_db: float
    pump_detuning: float
    rf_power_dbm: float
    polymer: PolymerParams
    film: SuperconductorParams
    alpha_k: float
    cpw: CpwGeometry
    spiral: SpiralGeometry
    slot: SlotCircuit
    resistivity: float
    stray_light: StrayLightModel
    schedule: PulseSchedule
    rate: RateModel
    probe: ResonatorProbe
    measured_efficiency: float | None = None
    measured_efficiency_uncertainty: float = 0.0
    reference_g0: float | None = None
    reference_g0_tolerance: float = 0.05
    sweep: SweepSpec | None = None
    optimize: OptimizeSpec | None = None

    def with_device(self, device: DeviceParams)->"Scenario":
        return replace(self, device=device)
