import logging

import numpy as np
from fastapi import APIRouter, HTTPException, status

from arfima_misspec.config import settings
from arfima_misspec.models.results import EstimationResult
from arfima_misspec.routers.errors import to_http_error
from arfima_misspec.schemas.requests import EstimationRequest
from arfima_misspec.services.estimators import estimate

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/estimate", response_model=EstimationResult)
def fit(request: EstimationRequest):
    """
    Fit the family to a zero-mean series with the chosen estimator.
    """
    if len(request.series) < settings.MIN_SAMPLE_SIZE:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"At least {settings.MIN_SAMPLE_SIZE} observations are required"
        )
    try:
        return estimate(request.method, request.family, np.asarray(request.series), n_starts=request.n_starts)
    except Exception as e:
        raise to_http_error(e, f"running the {request.method.value} estimator")
