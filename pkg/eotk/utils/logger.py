import logging
import sys
from functools import lru_cache
from typing import TextIO

import structlog


def _configure_structlog(processors:list)->None:
    structlog.configure(
        processors=processors+[structlog.stdlib.ProcessorFormatter.wrap_for_formatter],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )

def setup_logger(log_level:str="INFO", stream:TextIO|None=None, log_format:str="console")->None:
    """Configure structlog on top of the standard library root logger.

    Args:
        log_level: Root level name (DEBUG, INFO, ...)
        stream: Handler stream; the server logs to stdout, the CLI to stderr
        log_format: "console" for human readable lines, "json" for one JSON object per line
    """
    shared_processors=[
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S", utc=False),
    ]
    renderer=(
        structlog.processors.JSONRenderer(sort_keys=True)
        if log_format=="json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    _configure_structlog(shared_processors)

    formatter=structlog.stdlib.ProcessorFormatter(
        foreign_pre_chain=shared_processors,
        processors=[
            structlog.stdlib.ProcessorFormatter.remove_processors_meta,
            renderer,
        ],
    )

    # Configure root logger
    root_logger=logging.getLogger()
    root_logger.setLevel(getattr(logging, log_level.upper(), logging.INFO))

    # Remove existing handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler=logging.StreamHandler(stream or sys.stdout)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    # Reduce noise from third-party libraries
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("httpcore").setLevel(logging.WARNING)
    logging.getLogger("uvicorn.access").setLevel(logging.WARNING)

@lru_cache
def get_logger(name:str)->structlog.stdlib.BoundLogger:
    """Get a logger instance for a module.

    Args:
        name: Logger name (typically __name__)

    Returns:
        structlog logger bound to the standard library logger `name`
    """
    if not structlog.is_configured():
        # Route through stdlib logging even before setup_logger runs
        _configure_structlog([structlog.stdlib.add_log_level, structlog.stdlib.add_logger_name])
    return structlog.get_logger(name)

class Logger_Mixin:
    """Mixin class to add logging capability to classes."""
    @property
    def logger(self)->structlog.stdlib.BoundLogger:
        return get_logger(self.__class__.__name__)
