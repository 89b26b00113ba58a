"""Singular quadrature on (0, upper].

Integrands of the form ``lambda**alpha * h(lambda)`` with ``alpha > -1`` and a
smooth (up to logarithms) ``h`` show up everywhere: autocovariances of long
memory spectra, the limiting objective, the B and Lambda matrices. The interval
is split at ``settings.QUAD_SPLIT``; on the left piece the substitution
``lambda = t**(1/(1+alpha))`` absorbs the power singularity and both pieces go
to QUADPACK.
"""
import logging
from typing import Callable

import numpy as np
from scipy import integrate

from arfima_misspec.config import settings
from arfima_misspec.exceptions import QuadratureFailure

logger = logging.getLogger(__name__)


def _quad(func: Callable[[float], float], a: float, b: float, epsabs: float, epsrel: float, limit: int) -> float:
    result = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    value, abserr = result[0], result[1]
    if not np.isfinite(value):
        raise QuadratureFailure(f"Non-finite integral on [{a}, {b}]")
    if len(result) > 3:
        # QUADPACK flags roundoff long before the answer is unusable
        if abserr > 1e-6 * max(1.0, abs(value)):
            raise QuadratureFailure(f"Quadrature on [{a}, {b}] failed: {result[3]}")
        logger.debug(f"Accepted flagged quadrature on [{a}, {b}], abserr={abserr:.2e}")
    return value


def singular_integral(
    func: Callable[[float], float],
    alpha: float,
    upper: float = np.pi,
    epsabs: float = None,
    epsrel: float = None,
    limit: int = None,
    check: bool = False,
) -> float:
    """Integrate ``func`` over (0, upper] where ``func ~ lambda**alpha`` at 0.

    Args:
        func: Scalar integrand; never evaluated at 0.
        alpha: Exponent of the endpoint singularity, must exceed -1.
        upper: Upper limit.
        epsabs: Absolute tolerance (defaults to settings).
        epsrel: Relative tolerance (defaults to settings).
        limit: Subinterval limit for QUADPACK.
        check: Re-run at half the tolerance and warn when the two results
            differ by more than ten times the tolerance.

    Returns:
        The integral value.
    """
    if alpha <= -1.0:
        raise QuadratureFailure(f"Endpoint exponent {alpha} is not integrable")
    epsabs = settings.QUAD_EPSABS if epsabs is None else epsabs
    epsrel = settings.QUAD_EPSREL if epsrel is None else epsrel
    limit = settings.QUAD_LIMIT if limit is None else limit

    split = min(settings.QUAD_SPLIT, upper)
    power = 1.0 + alpha

    def left(t: float) -> float:
        lam = t ** (1.0 / power)
        return func(lam) * lam ** (-alpha) / power

    def evaluate(tol_abs: float, tol_rel: float) -> float:
        total = _quad(left, 0.0, split ** power, tol_abs, tol_rel, limit)
        if upper > split:
            total += _quad(func, split, upper, tol_abs, tol_rel, limit)
        return total

    value = evaluate(epsabs, epsrel)
    if check:
        refined = evaluate(epsabs / 2, epsrel / 2)
        tolerance = 10 * max(epsabs, epsrel * abs(refined))
        if abs(refined - value) > tolerance:
            logger.warning(
                f"Richardson check failed: {value:.12g} vs {refined:.12g} (tolerance {tolerance:.2e})"
            )
        value = refined
    return value
