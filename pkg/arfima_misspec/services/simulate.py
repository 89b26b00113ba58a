import logging
from functools import lru_cache

import numpy as np
from scipy import linalg

from arfima_misspec.exceptions import CholeskyFailure
from arfima_misspec.models.arfima import ArfimaSpec, SimulationPlan
from arfima_misspec.services.arfima_model import autocovariance, validate_spec
from arfima_misspec.utils.rng import standard_normals

logger = logging.getLogger(__name__)


@lru_cache(maxsize=16)
def covariance_factor(spec: ArfimaSpec, n: int) -> np.ndarray:
    """
    Lower Cholesky factor of the n x n Toeplitz autocovariance matrix.

    Cached per (spec, n) and shared read-only by all replications.

    Args:
        spec: Validated specification
        n: Sample size

    Returns:
        Lower-triangular factor L with L L^T = [gamma(|i-j|)]
    """
    gamma = autocovariance(spec, n - 1)
    try:
        factor = linalg.cholesky(linalg.toeplitz(gamma), lower=True)
    except linalg.LinAlgError as e:
        logger.error(f"Error factorizing covariance for n={n}: {str(e)}")
        raise CholeskyFailure(f"Covariance of {spec.model_dump()} at n={n} is not positive definite") from e
    factor.setflags(write=False)
    logger.info(f"Built covariance factor for n={n}, d={spec.d}")
    return factor


def simulate_gaussian(plan: SimulationPlan, r: int) -> np.ndarray:
    """
    Exact zero-mean Gaussian draw number r of the plan.

    Args:
        plan: Simulation plan (spec, n, seed, replications)
        r: Replication index

    Returns:
        Series of length n, fully determined by (seed, r)
    """
    if not 0 <= r < plan.replications:
        raise ValueError(f"Replication index {r} outside [0, {plan.replications})")
    validate_spec(plan.spec)
    factor = covariance_factor(plan.spec, plan.n)
    return factor @ standard_normals(plan.seed, r, plan.n)


def simulate_all(plan: SimulationPlan) -> np.ndarray:
    """All replications as an (n, replications) array, one column per draw."""
    return np.column_stack([simulate_gaussian(plan, r) for r in range(plan.replications)])
