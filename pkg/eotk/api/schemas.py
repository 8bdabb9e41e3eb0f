"""Pydantic schemas for the run configuration and the API request/response models.

Every rate in the configuration is an ordinary frequency in Hz; `RunConfig.to_domain`
multiplies by 2 pi once, at this boundary.
"""

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from eotk.core.dynamics import PulseSchedule, RateModel, ResonatorProbe
from eotk.core.eo_model import PolymerParams, StrayLightModel, predicted_g0
from eotk.core.io import SCHEMA_VERSION
from eotk.core.optimizer import validate_box
from eotk.core.quantities import (
    CouplingTopology,
    DeviceParams,
    MicrowaveMode,
    OpticalMode,
    SuperconductorParams,
    from_hz,
)
from eotk.core.resonator import CpwGeometry, SpiralGeometry, etched_test_device, strip_loaded_slot
from eotk.core.scenario import Objective, OptimizeSpec, Scenario, SweepSpec, SweepTarget
from eotk.core.superconductor import film_from_preset
from eotk.exceptions import ConfigError, EotkError


class _Block(BaseModel):
    model_config=ConfigDict(extra="forbid")


# ============== Device Blocks ==============


class OpticalBlock(_Block):
    frequency_hz: float = Field(..., gt=0, description="Optical resonance frequency")
    kappa_i_hz: float = Field(..., gt=0, description="Intrinsic loss rate")
    kappa_e_hz: float = Field(..., gt=0, description="External coupling rate")
    kappa_tot_hz: float | None = Field(None, description="Total loss rate; derived when omitted")
    coupling_topology: CouplingTopology = "single-sided"

    @model_validator(mode="after")
    def _composition(self)->"OpticalBlock":
        _build_mode(self.to_domain)
        return self

    def to_domain(self)->OpticalMode:
        return OpticalMode(
            omega_opt=from_hz(self.frequency_hz),
            kappa_i=from_hz(self.kappa_i_hz),
            kappa_e=from_hz(self.kappa_e_hz),
            kappa_tot=None if self.kappa_tot_hz is None else from_hz(self.kappa_tot_hz),
            coupling_topology=self.coupling_topology,
        )


class MicrowaveBlock(_Block):
    frequency_hz: float = Field(..., gt=0, description="Microwave resonance frequency")
    gamma_i_hz: float = Field(..., gt=0, description="Intrinsic loss rate")
    gamma_e_hz: float = Field(..., gt=0, description="External coupling rate per port")
    gamma_tot_hz: float | None = Field(None, description="Total loss rate; derived when omitted")
    coupling_topology: CouplingTopology = "two-sided"

    @model_validator(mode="after")
    def _composition(self)->"MicrowaveBlock":
        _build_mode(self.to_domain)
        return self

    def to_domain(self)->MicrowaveMode:
        return MicrowaveMode(
            omega_mw=from_hz(self.frequency_hz),
            gamma_i=from_hz(self.gamma_i_hz),
            gamma_e=from_hz(self.gamma_e_hz),
            gamma_tot=None if self.gamma_tot_hz is None else from_hz(self.gamma_tot_hz),
            coupling_topology=self.coupling_topology,
        )


def _build_mode(factory):
    """Run a domain constructor, re-raising its complaint as a plain ValueError for this block."""
    try:
        return factory()
    except ValidationError as exc:
        raise ValueError(exc.errors()[0]["msg"].removeprefix("Value error, ")) from None


class DeviceBlock(_Block):
    optical: OpticalBlock
    microwave: MicrowaveBlock
    impedance_ohm: float = Field(..., gt=0, description="Microwave resonator impedance")
    g0_hz: float | None = Field(None, ge=0, description="Vacuum coupling rate; predicted from tuning when omitted")
    g0_uncertainty_hz: float = Field(0.0, ge=0)


class TuningBlock(_Block):
    pm_per_volt: float = Field(1.1, gt=0, description="Resonance wavelength tuning rate")
    wavelength_nm: float = Field(1557.92, gt=0)
    reference_g0_hz: float | None = Field(None, gt=0, description="Expected g0 for the report check")
    reference_tolerance: float = Field(0.05, gt=0)


class OperatingPointBlock(_Block):
    pump_power_dbm: float = Field(-26.0, description="Pump power before the input chain")
    input_loss_db: float = Field(0.0, ge=0)
    pump_detuning_hz: float | None = Field(None, description="Pump minus cavity frequency; -f_MW when omitted")
    rf_power_dbm: float = -31.0
    measured_efficiency: float | None = Field(None, ge=0)
    measured_efficiency_uncertainty: float = Field(0.0, ge=0)


class SuperconductorBlock(_Block):
    material: str = Field("Al", description="Material preset name")
    record: SuperconductorParams | None = Field(None, description="Explicit film record; overrides the preset")
    alpha_k: float = Field(0.05, gt=0, lt=1, description="Kinetic inductance fraction of the resonator")


class SlotBlock(_Block):
    geometry: Literal["strip_loaded", "etched_test_device"] = "etched_test_device"
    resistivity_ohm_m: float = Field(0.125, gt=0)


class StrayLightBlock(_Block):
    enabled: bool = True
    absorbed_fraction: float = Field(0.01, ge=0, le=1)
    bath_temperature: float = Field(0.02, gt=0, description="K")
    heating_coefficient: float = Field(2.44e-7, gt=0, description="W / K^p")
    rf_heating_coefficient: float = Field(2.5e-5, gt=0, description="W / K^p")
    heating_exponent: float = Field(4.0, gt=0)


class PulseBlock(_Block):
    period_s: float = Field(20e-3, gt=0)
    on_duration_s: float = Field(2e-3, gt=0)
    optical_power_on_w: float = Field(1e-6, ge=0)
    absorbed_fraction: float = Field(0.01, ge=0, le=1)
    switch_rise_time_s: float = Field(100e-9, ge=0)
    start_s: float = Field(0.0, ge=0)
    generation_rate_per_um3_s: float | None = Field(None, ge=0, description="Derived from absorbed power when omitted")
    volume_um3: float = Field(2600.0, gt=0, description="Absorbing film volume")
    pair_breaking_efficiency: float = Field(0.57, gt=0, le=1)
    background_density_per_um3: float = Field(5e3, ge=0)
    tau_rise_s: float = Field(655e-6, gt=0)
    tau_fall_s: float = Field(450e-6, gt=0)
    thermal_weight: float = Field(1.0, ge=0)
    slow_stage_weight: float = Field(0.0, ge=0)
    slow_stage_tau_s: float = Field(1.5, gt=0)

    @model_validator(mode="after")
    def _duty(self)->"PulseBlock":
        if self.on_duration_s>self.period_s:
            raise ValueError("on_duration_s must not exceed period_s")
        return self


# ============== Run Blocks ==============


class LinspaceBlock(_Block):
    start: float
    stop: float
    num: int = Field(..., ge=1)


class SweepBlock(_Block):
    target: SweepTarget
    values: list[float] | None = None
    linspace: LinspaceBlock | None = None

    @model_validator(mode="after")
    def _grid(self)->"SweepBlock":
        if (self.values is None)==(self.linspace is None):
            raise ValueError("give exactly one of values or linspace")
        if self.values is not None and not self.values:
            raise ValueError("sweep grid is empty")
        return self

    def grid(self)->tuple[float, ...]:
        if self.values is not None:
            return tuple(float(v) for v in self.values)
        return tuple(float(v) for v in np.linspace(self.linspace.start, self.linspace.stop, self.linspace.num))


class OptimizeBlock(_Block):
    objective: Objective
    box: dict[str, tuple[float, float]]
    starts: int | None = Field(None, ge=1, description="Multi-start count; settings default when omitted")
    max_rounds: int = Field(20, ge=1)
    tolerance: float = Field(1e-6, gt=0)
    target_srf_hz: float | None = Field(None, gt=0, description="Spiral SRF target; microwave frequency when omitted")

    @model_validator(mode="after")
    def _box(self)->"OptimizeBlock":
        try:
            validate_box(self.objective, self.box)
        except ConfigError as exc:
            raise ValueError(exc.message) from None
        return self


class RunConfig(_Block):
    """Top-level run configuration (JSON, fail-closed on unknown keys)."""

    schema_version: Literal[1] = Field(..., description="Configuration schema version")
    name: str = "run"
    device: DeviceBlock
    tuning: TuningBlock = Field(default_factory=TuningBlock)
    operating_point: OperatingPointBlock = Field(default_factory=OperatingPointBlock)
    polymer: PolymerParams = Field(default_factory=PolymerParams)
    superconductor: SuperconductorBlock = Field(default_factory=SuperconductorBlock)
    cpw: CpwGeometry = Field(default_factory=CpwGeometry)
    spiral: SpiralGeometry = Field(default_factory=SpiralGeometry)
    slot: SlotBlock = Field(default_factory=SlotBlock)
    stray_light: StrayLightBlock = Field(default_factory=StrayLightBlock)
    pulse: PulseBlock = Field(default_factory=PulseBlock)
    sweep: SweepBlock | None = None
    optimize: OptimizeBlock | None = None

    def film(self)->SuperconductorParams:
        if self.superconductor.record is not None:
            return self.superconductor.record
        try:
            return film_from_preset(self.superconductor.material)
        except EotkError as exc:
            raise ConfigError(exc.message, path="superconductor.material") from None

    def to_domain(self)->Scenario:
        """Domain scenario with angular rates; g0 is predicted from the tuning rate when not configured.

        Raises:
            ConfigError: a block is valid on its own but inconsistent with the rest
        """
        try:
            return self._to_domain()
        except ConfigError:
            raise
        except EotkError as exc:
            raise ConfigError(exc.message, diagnostics=exc.diagnostics) from exc

    def _to_domain(self)->Scenario:
        d=self.device
        device=DeviceParams(
            optical=d.optical.to_domain(),
            microwave=d.microwave.to_domain(),
            impedance=d.impedance_ohm,
            g0_uncertainty=from_hz(d.g0_uncertainty_hz),
        )
        tuning=self.tuning.pm_per_volt*1e-12
        wavelength=self.tuning.wavelength_nm*1e-9
        if d.g0_hz is None:
            device=device.with_g0(predicted_g0(tuning, wavelength, device), device.g0_uncertainty)
            g0_source="predicted"
        else:
            device=device.with_g0(from_hz(d.g0_hz), device.g0_uncertainty)
            g0_source="configured"

        film=self.film()
        alpha_k=self.superconductor.alpha_k
        f_mw=d.microwave.frequency_hz
        stray=StrayLightModel(**self.stray_light.model_dump(), alpha_k=alpha_k, film=film)
        slot=(strip_loaded_slot() if self.slot.geometry=="strip_loaded" else etched_test_device())
        slot=slot.model_copy(update={"analysis_frequency": f_mw})

        p=self.pulse
        schedule=PulseSchedule(
            period=p.period_s,
            on_duration=p.on_duration_s,
            optical_power_on=p.optical_power_on_w,
            absorbed_fraction=p.absorbed_fraction,
            switch_rise_time=p.switch_rise_time_s,
            start=p.start_s,
        )
        rate=RateModel.from_superconductor(
            film,
            generation_rate=p.generation_rate_per_um3_s,
            schedule=schedule,
            volume=p.volume_um3,
            pair_breaking_efficiency=p.pair_breaking_efficiency,
            background_density=p.background_density_per_um3,
            tau_rise=p.tau_rise_s,
            tau_fall=p.tau_fall_s,
            thermal_weight=p.thermal_weight,
            slow_stage_weight=p.slow_stage_weight,
            slow_stage_tau=p.slow_stage_tau_s,
        )
        probe=ResonatorProbe(
            f0_cold=f_mw,
            kappa_i_cold=d.microwave.gamma_i_hz,
            kappa_e=d.microwave.gamma_e_hz,
            alpha_k=alpha_k,
        )

        op=self.operating_point
        sweep=None if self.sweep is None else SweepSpec(target=self.sweep.target, values=self.sweep.grid())
        optimize=None
        if self.optimize is not None:
            o=self.optimize
            optimize=OptimizeSpec(
                objective=o.objective,
                box={name: (float(lo), float(hi)) for name, (lo, hi) in o.box.items()},
                starts=o.starts,
                max_rounds=o.max_rounds,
                tolerance=o.tolerance,
                target_srf=o.target_srf_hz or f_mw,
            )
        return Scenario(
            device=device,
            g0_source=g0_source,
            tuning=tuning,
            wavelength=wavelength,
            pump_dbm=op.pump_power_dbm,
            input_loss_db=op.input_loss_db,
            pump_detuning=-device.microwave.omega_mw if op.pump_detuning_hz is None else from_hz(op.pump_detuning_hz),
            rf_power_dbm=op.rf_power_dbm,
            polymer=self.polymer,
            film=film,
            alpha_k=alpha_k,
            cpw=self.cpw if "sheet_inductance" in self.cpw.model_fields_set else self.cpw.model_copy(update={"sheet_inductance": film.Ls_ref}),
            spiral=self.spiral,
            slot=slot,
            resistivity=self.slot.resistivity_ohm_m,
            stray_light=stray,
            schedule=schedule,
            rate=rate,
            probe=probe,
            measured_efficiency=op.measured_efficiency,
            measured_efficiency_uncertainty=op.measured_efficiency_uncertainty,
            reference_g0=None if self.tuning.reference_g0_hz is None else from_hz(self.tuning.reference_g0_hz),
            reference_g0_tolerance=self.tuning.reference_tolerance,
            sweep=sweep,
            optimize=optimize,
        )


# ============== Loading ==============


def _error_path(error: dict[str, Any])->str:
    return ".".join(str(part) for part in error["loc"] if not str(part).startswith("function-"))


def load_run_config(data: Any)->RunConfig:
    """Validate a decoded configuration.

    Raises:
        ConfigError: first validation error, with its dotted field path
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    if data.get("schema_version")!=SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {data.get('schema_version')!r}; expected {SCHEMA_VERSION}", path="schema_version")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first=exc.errors()[0]
        raise ConfigError(
            first["msg"],
            path=_error_path(first),
            diagnostics={"errors": len(exc.errors())},
        ) from None


def read_config_file(path: str | Path)->dict[str, Any]:
    path=Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None


def _existing_paths(value: Any, prefix: str = "")->set[str]:
    paths: set[str]=set()
    if isinstance(value, dict):
        for key, child in value.items():
            path=f"{prefix}.{key}" if prefix else str(key)
            paths.add(path)
            paths|=_existing_paths(child, path)
    return paths


def apply_overrides(data: dict[str, Any], overrides: list[str])->dict[str, Any]:
    """Apply `path=value` overrides; the value is parsed as JSON and falls back to a string.

    Raises:
        ConfigError: malformed override or a path that names no configuration field
    """
    if not overrides:
        return data
    known=_existing_paths(load_run_config(data).model_dump())
    updated=json.loads(json.dumps(data))
    for override in overrides:
        path, sep, raw=override.partition("=")
        path=path.strip()
        if not sep or not path:
            raise ConfigError(f"override {override!r} is not of the form path=value", path="--set")
        if path not in known:
            raise ConfigError(f"override names an unknown field {path!r}", path=path)
        try:
            value=json.loads(raw)
        except json.JSONDecodeError:
            value=raw
        node=updated
        parts=path.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part]={}
            node=node[part]
        node[parts[-1]]=value
    return updated


# ============== Health Schemas ==============


class HealthResponse(BaseModel):
    """Health check response."""

    status: str = Field(..., description="Service status")
    timestamp: datetime = Field(
        default_factory=lambda: datetime.now(timezone.utc),
        description="Response timestamp",
    )
    version: str = Field(..., description="Application version")


class ReadinessResponse(BaseModel):
    """Readiness check response."""

    status: str = Field(..., description="Service status")
    solver_ok: bool = Field(..., description="Gap-equation solve succeeded")
    gap_uev: float | None = Field(None, description="Zero-temperature gap of the default film")


# ============== Fit Schemas ==============


class FanoFitRequest(BaseModel):
    """Spectrum to fit with a Fano-Lorentzian lineshape."""

    model_config=ConfigDict(extra="forbid")

    frequency_hz: list[float] = Field(..., min_length=1)
    psd: list[float] = Field(..., min_length=1)
    coupling: Literal["auto", "over", "under"] = "auto"
    external_ports: Literal[1, 2] = 1
    intercept: float = 0.0


class ExponentialFitRequest(BaseModel):
    """Time series to fit with a single exponential."""

    model_config=ConfigDict(extra="forbid")

    time_s: list[float] = Field(..., min_length=1)
    values: list[float] = Field(..., min_length=1)
    window: tuple[float, float] | None = None


class FitResponse(BaseModel):
    model: Literal["fano", "exponential"]
    parameters: dict[str, Any]
    stderr: dict[str, float | None]
    residual_norm: float | None
    flags: list[str]
    ok: bool


# ============== Calibration Schemas ==============


class CalibrateRequest(BaseModel):
    """Signal and dark heterodyne spectra on a shared grid."""

    model_config=ConfigDict(extra="forbid")

    frequency_hz: list[float] = Field(..., min_length=1)
    signal_psd: list[float] = Field(..., min_length=1)
    dark_psd: list[float] = Field(..., min_length=1)
    rbw_hz: float = Field(0.0, ge=0)
    window_hz: tuple[float, float]
    rf_power_dbm: float = -31.0
    microwave_frequency_hz: float = Field(6.672e9, gt=0)
    reference_width_hz: float | None = Field(None, gt=0)


# ============== Error Schemas ==============


class ErrorResponse(BaseModel):
    """Error response."""

    error: str = Field(..., description="Error type")
    detail: str | None = Field(None, description="Error details")
