"""Front-end service: turns configurations and spectra into the JSON/CSV payloads of the CLI and the API."""

from typing import Any

import numpy as np

from eotk.api.schemas import RunConfig
from eotk.core import io
from eotk.core.dynamics import (
    TimeSeries,
    fit_exponential,
    resonance_track,
    simulate_qp_dynamics,
    time_resolved_spectrum,
)
from eotk.core.optimizer import optimize
from eotk.core.quantities import TWO_PI, dbm_to_watts
from eotk.core.records import calibration_record, exponential_record, fano_record, json_safe
from eotk.core.report import build_report
from eotk.core.spectra import CouplingRegime, Spectrum, calibrate_efficiency, fit
from eotk.core.sweeps import run_sweep
from eotk.exceptions import FitQualityError
from eotk.utils.logger import Logger_Mixin


def _checked(record: dict[str, Any], strict: bool)->dict[str, Any]:
    if strict and not record["ok"]:
        raise FitQualityError(
            f"{record['model']} fit flagged: {', '.join(record['flags'])}",
            {"flags": record["flags"], "residual_norm": record["residual_norm"]},
        )
    return record


class ToolkitService(Logger_Mixin):
    """Stateless wrapper; every method is a pure function of its arguments."""

    def report(self, config: RunConfig)->dict[str, Any]:
        self.logger.info("building report", name=config.name)
        record=build_report(config.to_domain())
        return json_safe({"schema_version": io.SCHEMA_VERSION, "name": config.name, **record})

    def sweep(self, config: RunConfig, workers: int = 1)->str:
        """CSV text of the configured sweep."""
        columns, rows=run_sweep(config.to_domain(), workers=workers)
        return io.render_csv(columns, rows)

    def optimize(self, config: RunConfig, seed: int, starts: int)->dict[str, Any]:
        result=optimize(config.to_domain(), seed=seed, starts=starts)
        return json_safe({"schema_version": io.SCHEMA_VERSION, **result})

    def fit_fano(
        self,
        spectrum: Spectrum,
        coupling: CouplingRegime = "auto",
        external_ports: int = 1,
        intercept: float = 0.0,
        strict: bool = False,
    )->dict[str, Any]:
        """Fano fit record; with `strict` a flagged fit raises FitQualityError instead."""
        result=fit(spectrum, coupling=coupling, intercept=intercept, external_ports=external_ports)
        self.logger.info("fano fit", ok=result.ok, flags=result.flags)
        return _checked(json_safe({"schema_version": io.SCHEMA_VERSION, **fano_record(result)}), strict)

    def fit_exponential(
        self,
        series: TimeSeries,
        window: tuple[float, float] | None = None,
        strict: bool = False,
    )->dict[str, Any]:
        result=fit_exponential(series, window)
        self.logger.info("exponential fit", tau=result.tau, flags=result.flags)
        return _checked(json_safe({"schema_version": io.SCHEMA_VERSION, **exponential_record(result)}), strict)

    def calibrate(
        self,
        signal: Spectrum,
        dark: Spectrum,
        window: tuple[float, float],
        rf_power_dbm: float,
        microwave_frequency: float,
        reference_width: float | None = None,
    )->dict[str, Any]:
        result=calibrate_efficiency(
            signal,
            dark,
            window,
            dbm_to_watts(rf_power_dbm),
            TWO_PI*microwave_frequency,
            reference_width=reference_width,
        )
        self.logger.info("calibration", efficiency=result.efficiency, flags=result.flags)
        record=calibration_record(result, rf_power_dbm, microwave_frequency)
        return json_safe({"schema_version": io.SCHEMA_VERSION, **record})

    def simulate(self, config: RunConfig, periods: float = 1.0, samples: int = 2001)->str:
        """CSV time series of the pulsed response: n_qp, drive, f0 and loaded Q."""
        s=config.to_domain()
        horizon=periods*s.schedule.period
        series=simulate_qp_dynamics(s.rate, s.schedule, horizon, samples=samples)
        f0, q_total=resonance_track(series.values, s.film, s.probe)
        rows=(
            {"time_s": t, "n_qp_per_um3": n, "drive": d, "f0_hz": f, "q_loaded": q}
            for t, n, d, f, q in zip(series.time, series.values, series.extra["drive"], f0, q_total)
        )
        return io.render_csv(("time_s", "n_qp_per_um3", "drive", "f0_hz", "q_loaded"), rows)

    def simulate_matrix(self, config: RunConfig, periods: float, samples: int, span: float, points: int)->str:
        """Stacked |S21|^2 traces around the cold resonance, one row per time sample."""
        s=config.to_domain()
        probe=np.linspace(s.probe.f0_cold-0.5*span, s.probe.f0_cold+0.5*span, points)
        horizon=periods*s.schedule.period
        matrix=time_resolved_spectrum(
            s.rate,
            s.schedule,
            s.film,
            s.probe,
            probe,
            horizon,
            t_eval=np.linspace(0.0, horizon, samples),
        )
        return io.render_matrix(matrix.frequency, matrix.time, np.abs(matrix.s21)**2, "s21_power")
