"""Lineshape and time-series fitting endpoints."""

from fastapi import APIRouter

from eotk.api.routes.errors import http_error
from eotk.api.schemas import ErrorResponse, ExponentialFitRequest, FanoFitRequest, FitResponse
from eotk.core.dynamics import TimeSeries
from eotk.core.service import ToolkitService
from eotk.core.spectra import Spectrum
from eotk.exceptions import EotkError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)
router=APIRouter(prefix="/fit", tags=["Fit"])

_ERRORS={
    422: {"model": ErrorResponse, "description": "Invalid input data"},
    500: {"model": ErrorResponse, "description": "Fit failure"},
}


@router.post(
    "/fano",
    response_model=FitResponse,
    responses=_ERRORS,
    summary="Fano-Lorentzian fit",
    description="Fit an optical reflection spectrum; flagged fits are returned with ok=false.",
)
async def fit_fano(request: FanoFitRequest)->FitResponse:
    logger.info("fano fit requested", points=len(request.frequency_hz), coupling=request.coupling)
    try:
        spectrum=Spectrum(frequency=request.frequency_hz, psd=request.psd)
        record=ToolkitService().fit_fano(spectrum, request.coupling, request.external_ports, request.intercept)
    except EotkError as e:
        raise http_error(e)
    return FitResponse(**record)


@router.post(
    "/exponential",
    response_model=FitResponse,
    responses=_ERRORS,
    summary="Exponential fit",
    description="Fit a(t)=A exp(-(t-t0)/tau)+c to a time series.",
)
async def fit_exponential(request: ExponentialFitRequest)->FitResponse:
    logger.info("exponential fit requested", points=len(request.time_s))
    try:
        series=TimeSeries(time=request.time_s, values=request.values)
        record=ToolkitService().fit_exponential(series, request.window)
    except EotkError as e:
        raise http_error(e)
    return FitResponse(**record)
