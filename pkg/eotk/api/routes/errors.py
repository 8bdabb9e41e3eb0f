"""Mapping from toolkit errors to HTTP errors."""

from fastapi import HTTPException

from eotk.exceptions import EotkError


def http_error(exc: EotkError)->HTTPException:
    """422 for rejected input, 500 for numerical failures."""
    status=422 if exc.exit_code==2 else 500
    return HTTPException(status_code=status, detail=exc.message)
