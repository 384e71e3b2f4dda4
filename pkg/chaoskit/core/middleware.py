from fastapi import Request
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware
import time
import logging

from chaoskit.core.exceptions import (
    ChaosKitException, ConfigValidationError, DomainError, ModelLoadError,
)

logger = logging.getLogger(__name__)


class LoggingMiddleware(BaseHTTPMiddleware):
    """Log all requests and responses"""

    async def dispatch(self, request: Request, call_next):
        start_time = time.time()

        logger.info(f"Request: {request.method} {request.url}")

        response = await call_next(request)

        process_time = time.time() - start_time
        logger.info(f"Response: {response.status_code} - {process_time:.4f}s")

        return response


def status_for(exc: ChaosKitException) -> int:
    """422 for bad input documents and arguments, 400 for everything else."""
    if isinstance(exc, (ModelLoadError, ConfigValidationError, DomainError)):
        return 422
    return 400


async def chaoskit_exception_handler(request: Request, exc: ChaosKitException) -> JSONResponse:
    logger.warning(f"{type(exc).__name__} on {request.url.path}: {exc.message}")
    return JSONResponse(status_code=status_for(exc), content={"detail": exc.message})
