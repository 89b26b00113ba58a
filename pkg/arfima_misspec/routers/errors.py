import logging

from fastapi import HTTPException, status

from arfima_misspec.exceptions import ArfimaError

logger = logging.getLogger(__name__)


def to_http_error(e: Exception, action: str) -> HTTPException:
    """Map domain errors to 422 and anything else to a logged 500."""
    if isinstance(e, HTTPException):
        return e
    if isinstance(e, ArfimaError):
        return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=f"{type(e).__name__}: {str(e)}")
    logger.error(f"Error {action}: {str(e)}")
    return HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=f"Failed {action}: {str(e)}")
