"""Heterodyne efficiency calibration endpoint."""

from typing import Any

from fastapi import APIRouter

from eotk.api.routes.errors import http_error
from eotk.api.schemas import CalibrateRequest, ErrorResponse
from eotk.core.service import ToolkitService
from eotk.core.spectra import Spectrum
from eotk.exceptions import EotkError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)
router=APIRouter(prefix="/calibrate", tags=["Calibrate"])


@router.post(
    "",
    responses={
        422: {"model": ErrorResponse, "description": "Invalid spectra or window"},
        500: {"model": ErrorResponse, "description": "Calibration failure"},
    },
    summary="Efficiency calibration",
    description="Dark-subtract, reference the shot-noise floor and convert the sideband to a photon-number efficiency.",
)
async def calibrate(request: CalibrateRequest)->dict[str, Any]:
    logger.info("calibration requested", points=len(request.frequency_hz), window=request.window_hz)
    try:
        signal=Spectrum(frequency=request.frequency_hz, psd=request.signal_psd, rbw=request.rbw_hz, kind="heterodyne_rf")
        dark=Spectrum(frequency=request.frequency_hz, psd=request.dark_psd, rbw=request.rbw_hz, kind="heterodyne_rf")
        return ToolkitService().calibrate(
            signal,
            dark,
            request.window_hz,
            request.rf_power_dbm,
            request.microwave_frequency_hz,
            request.reference_width_hz,
        )
    except EotkError as e:
        raise http_error(e)
