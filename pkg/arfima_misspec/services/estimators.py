"""Criterion functions of the four estimators and the multi-start minimizer.

Frequency-domain criteria use the spectral shape f1 = g1 (2 sin(lam/2))^(-2d)
without the sigma2/2pi scale. The time-domain likelihood works with the
autocovariance of the fitted model at unit innovation variance. The mean is
taken as known and equal to zero; series are never demeaned.
"""
import logging
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit
from scipy.stats import qmc

from arfima_misspec.config import settings
from arfima_misspec.exceptions import ArfimaError, NoConvergence, NonPositiveDefinite
from arfima_misspec.models.arfima import EstimatorKind, EtaVector, FamilySpec
from arfima_misspec.models.results import EstimationResult
from arfima_misspec.services.arfima_model import ar_inf_coefficients, autocovariance, bare_spectral_density
from arfima_misspec.utils.polynomials import pacf_to_coefficients

logger = logging.getLogger(__name__)


def periodogram(y: np.ndarray) -> np.ndarray:
    """
    Periodogram at the Fourier frequencies 2 pi j / n, j = 1..floor(n/2).

    Args:
        y: Series of length n >= 2

    Returns:
        I(lam_j) = |sum_t y_t exp(-i lam_j t)|^2 / (2 pi n)
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 2:
        raise ValueError("The periodogram needs at least two observations")
    dft = np.fft.fft(y)[1: n // 2 + 1]
    return np.abs(dft) ** 2 / (2.0 * np.pi * n)


def fourier_frequencies(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(1, n // 2 + 1) / n


def _resolve_n(I: np.ndarray, n: Optional[int]) -> int:
    return 2 * len(I) if n is None else n


def _model_shape(eta: EtaVector, family: FamilySpec, lam: np.ndarray) -> np.ndarray:
    phi, theta = family.split(eta.beta)
    return bare_spectral_density(eta.d, phi, theta, lam)


def fml_objective(eta: EtaVector, family: FamilySpec, I: np.ndarray, n: Optional[int] = None) -> float:
    """(2 pi / n) sum_j I(lam_j) / f1(eta, lam_j); n defaults to 2 len(I)."""
    n = _resolve_n(I, n)
    f1 = _model_shape(eta, family, fourier_frequencies(n)[: len(I)])
    return float(2.0 * np.pi / n * np.sum(I / f1))


def whittle_objective(
    eta: EtaVector, sigma2: float, family: FamilySpec, I: np.ndarray, n: Optional[int] = None
) -> float:
    """(4/n) sum log(sigma2 f1 / 2pi) + (8 pi / (sigma2 n)) sum I / f1."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    n = _resolve_n(I, n)
    f1 = _model_shape(eta, family, fourier_frequencies(n)[: len(I)])
    return float(4.0 / n * np.sum(np.log(sigma2 * f1 / (2.0 * np.pi))) + 8.0 * np.pi / (sigma2 * n) * np.sum(I / f1))


def whittle_sigma2(eta: EtaVector, family: FamilySpec, I: np.ndarray, n: Optional[int] = None) -> float:
    """Minimizer of the Whittle criterion over sigma2, (4 pi / n) sum I / f1."""
    return 2.0 * fml_objective(eta, family, I, n)


def durbin_levinson(gamma: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """
    Innovations decomposition of a stationary Gaussian likelihood.

    Args:
        gamma: Autocovariances gamma(0..n-1)
        y: Series of length n

    Returns:
        (log det Sigma, y' Sigma^-1 y) as sum log v_t and sum e_t^2 / v_t
    """
    n = y.size
    v = gamma[0]
    if v <= 0:
        raise NonPositiveDefinite("Non-positive variance")
    logdet = np.log(v)
    quad = y[0] ** 2 / v
    coeffs = np.zeros(0)
    for t in range(1, n):
        kappa = (gamma[t] - coeffs @ gamma[t - 1:0:-1]) / v
        coeffs = np.concatenate((coeffs - kappa * coeffs[::-1], [kappa]))
        v *= 1.0 - kappa * kappa
        if not v > 0:
            raise NonPositiveDefinite(f"Prediction variance collapsed at t={t}")
        e = y[t] - coeffs @ y[t - 1::-1]
        logdet += np.log(v)
        quad += e * e / v
    return float(logdet), float(quad)


def _tml_terms(eta: EtaVector, family: FamilySpec, y: np.ndarray) -> Tuple[float, float]:
    gamma = autocovariance(family.to_spec(eta, sigma2=1.0), y.size - 1)
    return durbin_levinson(gamma, y)


def tml_objective(eta: EtaVector, sigma2: float, family: FamilySpec, y: np.ndarray) -> float:
    """log sigma2 + (1/n) log|Sigma_eta| + y' Sigma_eta^-1 y / (n sigma2)."""
    y = np.asarray(y, dtype=float)
    n = y.size
    logdet, quad = _tml_terms(eta, family, y)
    return float(np.log(sigma2) + logdet / n + quad / (n * sigma2))


def css_residuals(eta: EtaVector, family: FamilySpec, y: np.ndarray) -> np.ndarray:
    """e_t = sum_{i<t} tau_i y_{t-i}, using only the observed past."""
    y = np.asarray(y, dtype=float)
    tau = ar_inf_coefficients(eta, family, y.size)
    return np.convolve(tau, y)[: y.size]


def css_objective(eta: EtaVector, family: FamilySpec, y: np.ndarray) -> float:
    e = css_residuals(eta, family, y)
    return float(np.mean(e * e))


class _Parameterization:
    """Unconstrained coordinates for (d, beta).

    d = lower + width * expit(x_0) on the inset d interval; the AR and MA
    blocks are partial autocorrelations tanh(x_i) mapped through
    Durbin-Levinson, so every point is stationary and invertible.
    """

    def __init__(self, family: FamilySpec, lower: float, upper: float):
        self.family = family
        self.lower = lower
        self.width = upper - lower

    def to_eta(self, x: np.ndarray) -> EtaVector:
        d = self.lower + self.width * expit(x[0])
        pacf = np.tanh(x[1:])
        phi = pacf_to_coefficients(pacf[: self.family.p])
        theta = pacf_to_coefficients(pacf[self.family.p:])
        return EtaVector(d=float(d), beta=tuple(np.concatenate((phi, theta))))

    def from_unit(self, u: float, pacf: np.ndarray) -> np.ndarray:
        """Coordinates of d = lower + width * u and the given PACFs."""
        return np.concatenate(([logit(u)], np.arctanh(pacf)))

    def starts(self, count: int) -> list:
        l = self.family.l
        points = [np.zeros(l + 1)]
        if count > 1:
            halton = qmc.Halton(d=l + 1, scramble=False).random(count)[1:]
            for u in halton:
                points.append(self.from_unit(0.1 + 0.8 * u[0], -0.8 + 1.6 * u[1:]))
        return points


def _criterion(kind: EstimatorKind, family: FamilySpec, y: np.ndarray) -> Tuple[Callable, Callable]:
    """Return (objective(eta), sigma2_hat(eta)) for the estimator."""
    n = y.size
    if kind in (EstimatorKind.FML, EstimatorKind.WHITTLE):
        I = periodogram(y)
        if kind == EstimatorKind.FML:
            return (
                lambda eta: fml_objective(eta, family, I, n),
                lambda eta: 2.0 * fml_objective(eta, family, I, n),
            )

        def concentrated(eta):
            sigma2 = whittle_sigma2(eta, family, I, n)
            return whittle_objective(eta, sigma2, family, I, n)

        return concentrated, lambda eta: whittle_sigma2(eta, family, I, n)
    if kind == EstimatorKind.TML:
        def profile(eta):
            logdet, quad = _tml_terms(eta, family, y)
            return float(np.log(quad / n) + logdet / n + 1.0)

        return profile, lambda eta: _tml_terms(eta, family, y)[1] / n
    return (
        lambda eta: css_objective(eta, family, y),
        lambda eta: css_objective(eta, family, y),
    )


def estimate(
    kind: EstimatorKind,
    family: FamilySpec,
    y: np.ndarray,
    n_starts: int = None,
    xatol: float = None,
    fatol: float = None,
    maxiter: int = None,
) -> EstimationResult:
    """
    Fit the family to a series by minimizing the chosen criterion.

    Args:
        kind: FML, WHITTLE, TML or CSS
        family: Orders of the fitted ARFIMA family
        y: Zero-mean series
        n_starts: Simplex starts (box center plus quasi-random points)
        xatol: Simplex diameter tolerance
        fatol: Objective spread tolerance
        maxiter: Iteration cap per start

    Returns:
        EstimationResult for the best converged start
    """
    y = np.asarray(y, dtype=float)
    if y.size < settings.MIN_SAMPLE_SIZE:
        raise ValueError(f"At least {settings.MIN_SAMPLE_SIZE} observations are required, got {y.size}")
    n_starts = settings.N_STARTS if n_starts is None else n_starts
    options = {
        "xatol": settings.SIMPLEX_XATOL if xatol is None else xatol,
        "fatol": settings.SIMPLEX_FATOL if fatol is None else fatol,
        "maxiter": settings.SIMPLEX_MAXITER if maxiter is None else maxiter,
    }

    param = _Parameterization(family, settings.D_LOWER + settings.D_INSET, settings.D_UPPER - settings.D_INSET)
    objective, sigma2_hat = _criterion(kind, family, y)

    def target(x: np.ndarray) -> float:
        try:
            value = objective(param.to_eta(x))
        except ArfimaError as e:
            logger.debug(f"Objective failed at {x}: {str(e)}")
            return np.inf
        return value if np.isfinite(value) else np.inf

    best = None
    iterations = 0
    starts = param.starts(n_starts)
    converged_starts = 0
    for x0 in starts:
        result = minimize(target, x0, method="Nelder-Mead", options=options)
        iterations += int(result.nit)
        if not result.success:
            logger.debug(f"{kind.value} start {x0} stopped: {result.message}")
            continue
        converged_starts += 1
        if best is None or result.fun < best.fun:
            best = result

    if best is None:
        raise NoConvergence(f"No {kind.value} start converged within {options['maxiter']} iterations")

    eta_hat = param.to_eta(best.x)
    return EstimationResult(
        kind=kind,
        eta_hat=eta_hat,
        sigma2_hat=float(sigma2_hat(eta_hat)),
        objective=float(best.fun),
        iterations=iterations,
        converged=True,
        restarts_used=len(starts),
        converged_starts=converged_starts,
    )
