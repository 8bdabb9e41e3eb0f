"""Health check endpoints."""

from datetime import datetime, timezone

import scipy.constants as sc
from fastapi import APIRouter, HTTPException

from eotk import __version__
from eotk.api.schemas import HealthResponse, ReadinessResponse
from eotk.core.quantities import aluminum_film
from eotk.core.superconductor import gap_at_temperature
from eotk.exceptions import EotkError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)
router=APIRouter(prefix="/health", tags=["Health"])


@router.get(
    "",
    response_model=HealthResponse,
    summary="Basic health check",
    description="Returns basic health status of the service.",
)
async def health_check()->HealthResponse:
    """Basic health check endpoint."""
    logger.debug("health check requested")
    return HealthResponse(
        status="healthy",
        timestamp=datetime.now(timezone.utc),
        version=__version__,
    )


@router.get(
    "/ready",
    response_model=ReadinessResponse,
    summary="Readiness check",
    description="Solves the gap equation of the default aluminum film to confirm the numerical stack works.",
)
async def readiness_check()->ReadinessResponse:
    logger.debug("readiness check requested")
    try:
        state=gap_at_temperature(aluminum_film(), 0.0)
    except EotkError as e:
        logger.error("readiness check failed", error=e.message)
        raise HTTPException(
            status_code=503,
            detail=f"Service is not ready : {e.message}",
        )
    return ReadinessResponse(
        status="ready",
        solver_ok=True,
        gap_uev=state.gap/sc.e*1e6,
    )
