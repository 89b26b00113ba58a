"""ARFIMA representation: validation, spectra, autocovariances, filters."""
import logging
import warnings
from typing import Union

import numpy as np
from scipy.special import gammaln, hyp2f1

from arfima_misspec.config import settings
from arfima_misspec.exceptions import (
    CommonRoot,
    DOutOfRange,
    LambdaOutOfRange,
    NonInvertible,
    NonStationary,
    RepeatedArRoots,
)
from arfima_misspec.models.arfima import ArfimaSpec, EtaVector, FamilySpec
from arfima_misspec.utils.polynomials import lag_polynomial, polynomial_roots, series_divide
from arfima_misspec.utils.quadrature import singular_integral

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Extra backward-recursion steps above the largest hypergeometric index needed.
_HYPERGEOMETRIC_LEAD = 30


def validate_spec(spec: ArfimaSpec, long_memory: bool = False) -> ArfimaSpec:
    """
    Check the invariants of an ARFIMA specification.

    Args:
        spec: Specification to check
        long_memory: Require d in (0, 0.5), as for true processes and fitted models

    Returns:
        The same specification when every invariant holds
    """
    lower = 0.0 if long_memory else -0.5
    if not lower < spec.d < 0.5:
        raise DOutOfRange(f"d={spec.d} outside ({lower}, 0.5)")

    bound = 1.0 + settings.STATIONARITY_MARGIN
    ar_roots = polynomial_roots(spec.ar_poly)
    ma_roots = polynomial_roots(spec.ma_poly)
    if ar_roots.size and np.min(np.abs(ar_roots)) <= bound:
        raise NonStationary(f"AR root of modulus {np.min(np.abs(ar_roots)):.6g} is not outside the unit circle")
    if ma_roots.size and np.min(np.abs(ma_roots)) <= bound:
        raise NonInvertible(f"MA root of modulus {np.min(np.abs(ma_roots)):.6g} is not outside the unit circle")
    if ar_roots.size and ma_roots.size:
        gap = np.min(np.abs(ar_roots[:, None] - ma_roots[None, :]))
        if gap <= settings.COMMON_ROOT_TOL:
            raise CommonRoot(f"AR and MA polynomials share a root (distance {gap:.2e})")
    return spec


def transfer_ratio(phi, theta, lam: ArrayLike) -> ArrayLike:
    """Short-memory spectral factor ``|theta(e^{i lam})|^2 / |phi(e^{i lam})|^2``."""
    z = np.exp(1j * np.asarray(lam, dtype=float))
    num = np.abs(np.polynomial.polynomial.polyval(z, lag_polynomial(theta))) ** 2
    den = np.abs(np.polynomial.polynomial.polyval(z, lag_polynomial(phi))) ** 2
    return num / den


def long_memory_factor(d: float, lam: ArrayLike) -> ArrayLike:
    return (2.0 * np.sin(np.asarray(lam, dtype=float) / 2.0)) ** (-2.0 * d)


def bare_spectral_density(d: float, phi, theta, lam: ArrayLike) -> ArrayLike:
    """Spectral shape without the ``sigma2 / 2pi`` scale."""
    return transfer_ratio(phi, theta, lam) * long_memory_factor(d, lam)


def spectral_density(spec: ArfimaSpec, lam: ArrayLike) -> ArrayLike:
    """
    Spectral density of the process at frequencies in (0, pi].

    Args:
        spec: ARFIMA specification
        lam: Frequency or array of frequencies

    Returns:
        ``(sigma2 / 2pi) |theta|^2 / |phi|^2 (2 sin(lam/2))^(-2d)``
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0.0) or np.any(lam_arr > np.pi * (1 + 1e-12)):
        raise LambdaOutOfRange(f"Frequencies must lie in (0, pi], got {lam}")
    value = spec.sigma2 / (2.0 * np.pi) * bare_spectral_density(spec.d, spec.phi, spec.theta, lam_arr)
    return float(value) if np.ndim(value) == 0 else value


def fractional_coefficients(d: float, n: int) -> np.ndarray:
    """Coefficients of ``(1 - z)^d`` by the ratio recursion ``pi_j = pi_{j-1}(j-1-d)/j``."""
    j = np.arange(1, n)
    return np.concatenate(([1.0], np.cumprod((j - 1 - d) / j)))


def fractional_coefficients_derivative(d: float, n: int) -> np.ndarray:
    """Derivative of :func:`fractional_coefficients` with respect to d."""
    coeffs = fractional_coefficients(d, n)
    deriv = np.zeros(n)
    for j in range(1, n):
        deriv[j] = deriv[j - 1] * (j - 1 - d) / j - coeffs[j - 1] / j
    return deriv


def arma_ratio_coefficients(phi, theta, n: int) -> np.ndarray:
    """Power series of ``phi(z) / theta(z)`` to length n."""
    return series_divide(lag_polynomial(phi), lag_polynomial(theta), n)


def ar_inf_coefficients(eta: EtaVector, family: FamilySpec, n: int) -> np.ndarray:
    """
    AR(infinity) filter of the fitted model.

    The coefficients of ``(phi(z)/theta(z)) (1 - z)^d``; tau_0 = 1.

    Args:
        eta: Fitted parameter (d, beta)
        family: Orders that split beta into AR and MA parts
        n: Number of coefficients

    Returns:
        tau_0, ..., tau_{n-1}
    """
    phi, theta = family.split(eta.beta)
    alpha = arma_ratio_coefficients(phi, theta, n)
    return np.convolve(alpha, fractional_coefficients(eta.d, n))[:n]


def _fractional_noise_acov(d: float, max_lag: int) -> np.ndarray:
    """Unit-variance-innovation ARFIMA(0,d,0) autocovariances."""
    gamma0 = np.exp(gammaln(1.0 - 2.0 * d) - 2.0 * gammaln(1.0 - d))
    k = np.arange(max_lag)
    return gamma0 * np.concatenate(([1.0], np.cumprod((k + d) / (k + 1.0 - d))))


def _ma_autocorrelation(theta) -> np.ndarray:
    """psi(l) = sum_s theta_s theta_{s-l} for l = -q..q."""
    poly = lag_polynomial(theta)
    return np.correlate(poly, poly, mode="full")


def _hypergeometric_table(d: float, rho: complex, span: int) -> np.ndarray:
    """F(d+h, 1; 1-d+h; rho) for h = -span..span by backward recursion.

    Uses F(a,1;c;z) = 1 + (a/c) z F(a+1,1;c+1;z), which is stable downward
    for |z| < 1.
    """
    top = span + _HYPERGEOMETRIC_LEAD
    value = complex(hyp2f1(d + top, 1.0, 1.0 - d + top, rho))
    table = np.empty(2 * span + 1, dtype=complex)
    for h in range(top - 1, -span - 1, -1):
        value = 1.0 + (d + h) / (1.0 - d + h) * rho * value
        if h <= span:
            table[h + span] = value
    return table


def _gamma_ratio_table(d: float, span: int) -> np.ndarray:
    """Gamma(d+h) / (Gamma(d) Gamma(1-d+h)) for h = -span..span."""
    table = np.empty(2 * span + 1)
    table[span] = np.exp(-gammaln(1.0 - d))
    for h in range(0, span):
        table[span + h + 1] = table[span + h] * (d + h) / (1.0 - d + h)
    for h in range(0, -span, -1):
        table[span + h - 1] = table[span + h] * (h - d) / (h - 1.0 + d)
    return table


def _sowell_acov(spec: ArfimaSpec, max_lag: int) -> np.ndarray:
    rho = 1.0 / polynomial_roots(spec.ar_poly)
    p, q, d = spec.p, spec.q, spec.d
    psi = _ma_autocorrelation(spec.theta)
    span = max_lag + p + q
    prefactor = np.exp(gammaln(1.0 - 2.0 * d) - gammaln(1.0 - d)) * _gamma_ratio_table(d, span)

    lags = np.arange(max_lag + 1)
    offsets = np.arange(-q, q + 1)
    index = p + offsets[None, :] - lags[:, None] + span
    acov = np.zeros(max_lag + 1, dtype=complex)
    for j, rho_j in enumerate(rho):
        others = np.delete(rho, j)
        zeta = 1.0 / (rho_j * np.prod(1.0 - rho * rho_j) * np.prod(rho_j - others))
        table = _hypergeometric_table(d, rho_j, span)
        c = prefactor * (rho_j ** (2 * p) * table + table[::-1] - 1.0)
        acov += zeta * (c[index] * psi[None, :]).sum(axis=1)
    return spec.sigma2 * acov.real


def _numeric_acov(spec: ArfimaSpec, max_lag: int) -> np.ndarray:
    """gamma(k) = 2 * int_0^pi f(lam) cos(k lam) dlam."""
    acov = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        acov[k] = 2.0 * singular_integral(
            lambda lam: spectral_density(spec, lam) * np.cos(k * lam),
            alpha=-2.0 * spec.d,
            limit=max(settings.QUAD_LIMIT, 8 * k),
        )
    return acov


def autocovariance(spec: ArfimaSpec, max_lag: int) -> np.ndarray:
    """
    Exact autocovariances gamma(0..max_lag).

    Sowell's hypergeometric decomposition over the AR roots, with the
    hypergeometric functions and gamma ratios advanced by recursion in the
    lag. Pure ARFIMA(0,d,q) uses the fractional-noise closed form convolved
    with the MA autocorrelation. Repeated or nearly repeated AR roots fall
    back to spectral integration.

    Args:
        spec: Validated specification
        max_lag: Largest lag

    Returns:
        Array of max_lag + 1 autocovariances
    """
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if spec.p == 0:
        psi = _ma_autocorrelation(spec.theta)
        base = _fractional_noise_acov(spec.d, max_lag + spec.q)
        lags = np.abs(np.arange(max_lag + 1)[:, None] - np.arange(-spec.q, spec.q + 1)[None, :])
        return spec.sigma2 * (base[lags] * psi[None, :]).sum(axis=1)

    roots = polynomial_roots(spec.ar_poly)
    gaps = np.abs(roots[:, None] - roots[None, :]) + np.diag(np.full(roots.size, np.inf))
    if np.min(gaps) < settings.AR_ROOT_SEPARATION or abs(spec.d) < 1e-8:
        message = f"AR roots {roots} unsuitable for the partial-fraction autocovariance; integrating the spectrum"
        if np.min(gaps) < settings.AR_ROOT_SEPARATION:
            warnings.warn(message, RepeatedArRoots)
        logger.warning(message)
        return _numeric_acov(spec, max_lag)
    return _sowell_acov(spec, max_lag)
