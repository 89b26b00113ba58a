import logging
from typing import Union

from fastapi import APIRouter

from arfima_misspec.models.results import Case1Law, Case2Law, Case3Law
from arfima_misspec.routers.errors import to_http_error
from arfima_misspec.schemas.requests import LimitLawRequest
from arfima_misspec.services.asymptotics import build_limit_law
from arfima_misspec.services.pseudo_true import solve_pseudo_true

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/limit-law", response_model=Union[Case1Law, Case2Law, Case3Law])
def limit_law(request: LimitLawRequest):
    """
    Limit law of the d estimator at sample size n.

    The pseudo-true parameter is solved for when the request does not carry it.
    """
    try:
        eta1 = request.eta1 or solve_pseudo_true(request.pair).eta1
        law = build_limit_law(
            request.pair, eta1, request.n, request.method,
            S_n=request.S_n, w_const_variant=request.w_const_variant,
        )
        logger.info(f"Built case {law.case} law for {request.method.value} at n={request.n}")
        return law
    except Exception as e:
        raise to_http_error(e, "building the limit law")
