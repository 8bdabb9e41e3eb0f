"""Device report endpoint."""

from typing import Any

from fastapi import APIRouter, Body

from eotk.api.routes.errors import http_error
from eotk.api.schemas import ErrorResponse, load_run_config
from eotk.core.service import ToolkitService
from eotk.exceptions import EotkError
from eotk.utils.logger import get_logger

logger=get_logger(__name__)
router=APIRouter(prefix="/report", tags=["Report"])


@router.post(
    "",
    responses={
        422: {"model": ErrorResponse, "description": "Invalid run configuration"},
        500: {"model": ErrorResponse, "description": "Numerical failure"},
    },
    summary="Device report",
    description="Validate a run configuration and return derived quantities with the consistency checks.",
)
async def report(config: dict[str, Any] = Body(...))->dict[str, Any]:
    try:
        run_config=load_run_config(config)
        result=ToolkitService().report(run_config)
    except EotkError as e:
        logger.warning("report rejected", error=type(e).__name__, message=e.message)
        raise http_error(e)
    logger.info("report built", name=run_config.name, all_passed=result["all_passed"])
    return result
