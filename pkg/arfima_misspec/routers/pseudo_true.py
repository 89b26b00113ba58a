import logging

import numpy as np
from fastapi import APIRouter

from arfima_misspec.models.results import PseudoTrueSolution
from arfima_misspec.routers.errors import to_http_error
from arfima_misspec.schemas.requests import ContourRequest, ContourResponse, PseudoTrueRequest
from arfima_misspec.services.pseudo_true import q_contour_grid, solve_pseudo_true

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/solve", response_model=PseudoTrueSolution)
def solve(request: PseudoTrueRequest):
    """
    Solve for the pseudo-true parameter of the pair.
    """
    try:
        return solve_pseudo_true(request.pair)
    except Exception as e:
        raise to_http_error(e, "solving for the pseudo-true parameter")


@router.post("/contour", response_model=ContourResponse)
def contour(request: ContourRequest):
    """
    Limiting objective over a (d, beta_1) grid; inadmissible points are null.
    """
    try:
        grid = q_contour_grid(request.pair, request.d_grid, request.beta_grid, request.beta_rest)
        values = [[None if np.isnan(v) else float(v) for v in row] for row in grid]
        return ContourResponse(d_grid=request.d_grid, beta_grid=request.beta_grid, values=values)
    except Exception as e:
        raise to_http_error(e, "evaluating the contour grid")
