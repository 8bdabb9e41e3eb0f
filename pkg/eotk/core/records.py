"""JSON records for fit and calibration results, shared by the CLI and the HTTP routes."""

import math
from typing import Any

from eotk.core.dynamics import ExponentialFit
from eotk.core.spectra import CalibrationResult, FanoFit


def fano_record(result: FanoFit)->dict[str, Any]:
    m=result.model
    return {
        "model": "fano",
        "parameters": {
            **m.model_dump(),
            "kappa_tot": m.kappa_tot,
            "q_intrinsic": m.q_intrinsic,
            "q_total": m.q_total,
            "coupling": result.coupling,
        },
        "stderr": result.stderr,
        "residual_norm": result.residual_norm,
        "nfev": result.nfev,
        "flags": list(result.flags),
        "ok": result.ok,
    }


def exponential_record(result: ExponentialFit)->dict[str, Any]:
    return {
        "model": "exponential",
        "parameters": {
            "amplitude": result.amplitude,
            "tau": result.tau,
            "offset": result.offset,
            "t_start": result.t_start,
        },
        "stderr": result.stderr,
        "residual_norm": result.residual_norm,
        "flags": list(result.flags),
        "ok": not result.flags,
    }


def calibration_record(result: CalibrationResult, rf_power_dbm: float, microwave_frequency: float)->dict[str, Any]:
    """CalibrationResult fields plus the drive settings, echoed with the integration window."""
    record=result.model_dump()
    record["window"]=list(result.window)
    record["reference_bands"]=[list(band) for band in result.reference_bands]
    record["rf_power_dbm"]=rf_power_dbm
    record["microwave_frequency_hz"]=microwave_frequency
    record["ok"]=not result.flags
    return record


def json_safe(value: Any)->Any:
    """Replace NaN and infinities by None, recursively."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {key: json_safe(child) for key, child in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(child) for child in value]
    return value
