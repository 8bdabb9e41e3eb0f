"""FastAPI application entry point."""

# Load .env before the settings object is first built
# ruff: noqa: E402, I001

from dotenv import load_dotenv


load_dotenv()

from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from eotk import __version__
from eotk.utils.logger import get_logger, setup_logger
from eotk.config import get_settings
from eotk.api.routes import calibrate, fit, health, report

settings=get_settings()


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager."""
    # Startup
    setup_logger(settings.LOG_LEVEL, log_format=settings.LOG_FORMAT)
    logger=get_logger(__name__)
    logger.info("starting", app=settings.APP_NAME, version=__version__)
    logger.info("log level", level=settings.LOG_LEVEL)

    yield

    # Shutdown
    logger.info("shutting down application")

# Create FastAPI application
app=FastAPI(
    title=settings.APP_NAME,
    description="""
    ## Electro-Optic Transducer Toolkit API

    Device-level modelling of a cavity electro-optic microwave-to-optical transducer:
    - **Report** derived coupling rates, cooperativity and efficiency with consistency checks
    - **Fit** Fano-Lorentzian reflection spectra and exponential time series
    - **Calibrate** conversion efficiency from heterodyne sideband spectra

    Every rate in requests and responses is an ordinary frequency in Hz.
    """,
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc",
    openapi_url="/openapi.json",
    lifespan=lifespan,
)


# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_headers=["*"],
    allow_methods=["*"],
)

# Include routers
app.include_router(report.router)
app.include_router(fit.router)
app.include_router(calibrate.router)
app.include_router(health.router)


@app.get("/", tags=["Root"])
async def root()->dict[str, str]:
    return {"name": settings.APP_NAME, "version": __version__, "docs": "/docs"}


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Global exception handler."""
    logger=get_logger(__name__)
    logger.error("unhandled exception", path=request.url.path, error=str(exc), exc_info=True)

    return JSONResponse(
        status_code=500,
        content={
            "error": "Internal Server Error",
            "detail": str(exc),
        },
    )

if __name__=="__main__":
    import uvicorn

    uvicorn.run(
        "eotk.main:app",
        host=settings.API_HOST,
        port=settings.API_PORT,
        reload=True,
    )
