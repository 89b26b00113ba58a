import logging

import numpy as np
from fastapi import APIRouter

from arfima_misspec.routers.errors import to_http_error
from arfima_misspec.schemas.requests import (
    AutocovarianceRequest,
    AutocovarianceResponse,
    SpectralDensityRequest,
    SpectralDensityResponse,
)
from arfima_misspec.services.arfima_model import autocovariance, spectral_density, validate_spec

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/density", response_model=SpectralDensityResponse)
def density(request: SpectralDensityRequest):
    """
    Evaluate the spectral density at the requested frequencies.
    """
    try:
        spec = validate_spec(request.spec)
        values = np.atleast_1d(spectral_density(spec, np.asarray(request.frequencies)))
        return SpectralDensityResponse(frequencies=request.frequencies, density=values.tolist())
    except Exception as e:
        raise to_http_error(e, "evaluating the spectral density")


@router.post("/autocovariance", response_model=AutocovarianceResponse)
def autocovariances(request: AutocovarianceRequest):
    try:
        spec = validate_spec(request.spec)
        return AutocovarianceResponse(autocovariance=autocovariance(spec, request.max_lag).tolist())
    except Exception as e:
        raise to_http_error(e, "computing autocovariances")
