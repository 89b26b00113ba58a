import logging

from fastapi import APIRouter

from arfima_misspec.models.arfima import SimulationPlan
from arfima_misspec.routers.errors import to_http_error
from arfima_misspec.schemas.requests import SimulationRequest, SimulationResponse
from arfima_misspec.services.simulate import simulate_gaussian

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/draw", response_model=SimulationResponse)
def draw(request: SimulationRequest):
    """
    Exact Gaussian draw for one (seed, replication) pair.
    """
    try:
        plan = SimulationPlan(
            spec=request.spec, n=request.n, seed=request.seed, replications=request.replication + 1
        )
        series = simulate_gaussian(plan, request.replication)
        logger.info(f"Simulated n={request.n} for seed={request.seed}, r={request.replication}")
        return SimulationResponse(seed=request.seed, replication=request.replication, series=series.tolist())
    except Exception as e:
        raise to_http_error(e, "simulating the series")
