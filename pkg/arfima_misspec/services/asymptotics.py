"""Limit laws of the estimators around the pseudo-true parameter.

Spectral quantities use bare shapes f0 = g0 (2 sin(lam/2))^(-2 d0) and
f1 = g1 (2 sin(lam/2))^(-2 d). With u = 1/g1 and L = log(2 sin(lam/2)),

    1/f1 = u exp(2 d L),
    B    = -2 int_0^pi g0 (2 sin(lam/2))^(-2 d*) M(lam) dlam,

where M is the Hessian of 1/f1 with the exp(2 d L) factor removed:
[[4 L^2 u, 2 L du'], [2 L du, d2u]]. B is therefore -2 times the Hessian of
int_0^pi f0 / f1, negative definite at a minimizer.
"""
import logging
from functools import lru_cache
from typing import Optional, Tuple

import mpmath
import numpy as np
from scipy import integrate, linalg, stats

from arfima_misspec.config import settings
from arfima_misspec.exceptions import DegenerateSample, SingularB, UnsupportedN
from arfima_misspec.models.arfima import EstimatorKind, EtaVector, MisSpecPair
from arfima_misspec.models.results import Case1Law, Case2Law, Case3Law, WSumSamplerSpec
from arfima_misspec.services.arfima_model import (
    ar_inf_coefficients,
    arma_ratio_coefficients,
    autocovariance,
    fractional_coefficients,
    fractional_coefficients_derivative,
    transfer_ratio,
)
from arfima_misspec.services.estimators import fourier_frequencies
from arfima_misspec.services.pseudo_true import prediction_error_variance
from arfima_misspec.utils.polynomials import lag_polynomial, series_divide
from arfima_misspec.utils.quadrature import singular_integral
from arfima_misspec.utils.rng import NORMAL_STREAM, SAMPLER_STREAM_OFFSET, standard_normals

logger = logging.getLogger(__name__)

_SAMPLER_CHUNK = 10_000


# Spectral building blocks

def _polynomial_derivatives(coefficients, lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|c(e^{i lam})|^2 with its gradient and Hessian in the coefficients."""
    poly = lag_polynomial(coefficients)
    k = len(coefficients)
    z = np.exp(1j * lam)
    value = np.polynomial.polynomial.polyval(z, poly)
    modulus = np.abs(value) ** 2
    r = np.arange(1, k + 1)
    grad = 2.0 * np.real(value[None, :] * np.exp(-1j * np.outer(r, lam)))
    hess = 2.0 * np.cos((r[:, None, None] - r[None, :, None]) * lam[None, None, :])
    return modulus, grad, hess


def _inverse_g1_derivatives(pair: MisSpecPair, beta, lam: np.ndarray):
    """u = |phi|^2 / |theta|^2 with gradient (l, m) and Hessian (l, l, m) in beta."""
    phi, theta = pair.family.split(beta)
    p_val, p_grad, p_hess = _polynomial_derivatives(phi, lam)
    t_val, t_grad, t_hess = _polynomial_derivatives(theta, lam)
    p, q = len(phi), len(theta)
    l = p + q
    m = lam.size
    u = p_val / t_val
    grad = np.zeros((l, m))
    hess = np.zeros((l, l, m))
    grad[:p] = p_grad / t_val
    grad[p:] = -p_val * t_grad / t_val ** 2
    hess[:p, :p] = p_hess / t_val
    cross = -p_grad[:, None, :] * t_grad[None, :, :] / t_val ** 2
    hess[:p, p:] = cross
    hess[p:, :p] = np.transpose(cross, (1, 0, 2))
    hess[p:, p:] = p_val * (2.0 * t_grad[:, None, :] * t_grad[None, :, :] / t_val ** 3 - t_hess / t_val ** 2)
    return u, grad, hess


def _log_sine(lam):
    return np.log(2.0 * np.sin(np.asarray(lam, dtype=float) / 2.0))


def _g0(pair: MisSpecPair, lam):
    return transfer_ratio(pair.tdgp.phi, pair.tdgp.theta, lam)


def _hessian_kernel(pair: MisSpecPair, eta: EtaVector, lam: float) -> np.ndarray:
    lam_arr = np.array([lam])
    u, du, d2u = _inverse_g1_derivatives(pair, eta.beta, lam_arr)
    L = _log_sine(lam)
    l = pair.family.l
    M = np.empty((l + 1, l + 1))
    M[0, 0] = 4.0 * L * L * u[0]
    M[0, 1:] = M[1:, 0] = 2.0 * L * du[:, 0]
    M[1:, 1:] = d2u[:, :, 0]
    return M


def _log_gradient(pair: MisSpecPair, eta: EtaVector, lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(f0/f1, grad log f1) at frequencies lam; shapes (m,) and (l+1, m)."""
    u, du, _ = _inverse_g1_derivatives(pair, eta.beta, lam)
    L = _log_sine(lam)
    dstar = pair.tdgp.d - eta.d
    ratio = _g0(pair, lam) * u * np.exp(-2.0 * dstar * L)
    grad = np.vstack(([-2.0 * L], -du / u))
    return ratio, grad


def _matrix_integral(pair: MisSpecPair, alpha: float, entry) -> np.ndarray:
    size = pair.family.l + 1
    out = np.empty((size, size))
    for i in range(size):
        for j in range(i, size):
            out[i, j] = out[j, i] = singular_integral(lambda lam: entry(lam)[i, j], alpha=alpha, check=True)
    return out


def B_matrix(pair: MisSpecPair, eta1: EtaVector) -> np.ndarray:
    """
    Curvature matrix B of the limiting objective at eta1.

    Args:
        pair: True process and fitted family
        eta1: Pseudo-true parameter

    Returns:
        Symmetric (l+1) x (l+1) matrix
    """
    dstar = pair.tdgp.d - eta1.d

    def entry(lam: float) -> np.ndarray:
        weight = _g0(pair, lam) * (2.0 * np.sin(lam / 2.0)) ** (-2.0 * dstar)
        return -2.0 * weight * _hessian_kernel(pair, eta1, lam)

    B = _matrix_integral(pair, -2.0 * dstar, entry)
    return 0.5 * (B + B.T)


def example_b(theta0: float, dstar: float) -> float:
    """Scalar B for an MA(1) true process fitted by fractional noise."""

    def integrand(lam: float) -> float:
        L = _log_sine(lam)
        return (1.0 + theta0 ** 2 + 2.0 * theta0 * np.cos(lam)) * np.exp(-2.0 * dstar * L) * (2.0 * L) ** 2

    return -2.0 * singular_integral(integrand, alpha=-2.0 * dstar)


def lambda_matrix(pair: MisSpecPair, eta1: EtaVector) -> np.ndarray:
    """Lambda = 2 pi int_0^pi (f0/f1)^2 grad log f1 grad log f1' dlam (needs d* < 0.25)."""
    dstar = pair.tdgp.d - eta1.d

    def entry(lam: float) -> np.ndarray:
        ratio, grad = _log_gradient(pair, eta1, np.array([lam]))
        g = grad[:, 0]
        return 2.0 * np.pi * ratio[0] ** 2 * np.outer(g, g)

    return _matrix_integral(pair, -4.0 * dstar, entry)


def _inverse(B: np.ndarray) -> np.ndarray:
    if np.linalg.cond(B) > 1e12:
        raise SingularB(f"B is numerically singular (condition {np.linalg.cond(B):.3e})")
    return linalg.inv(B)


def xi_matrix(B: np.ndarray, Lambda: np.ndarray) -> np.ndarray:
    """Xi = B^-1 Lambda B^-1, symmetrized."""
    B_inv = _inverse(B)
    Xi = B_inv @ Lambda @ B_inv
    return 0.5 * (Xi + Xi.T)


def lambda_bar_dd(pair: MisSpecPair, eta1: EtaVector, n: int) -> float:
    """(1/n) sum_{j=1}^{n/2} (f0/f1 * d log f1 / dd)^2 at the Fourier frequencies."""
    ratio, grad = _log_gradient(pair, eta1, fourier_frequencies(n))
    return float(np.sum((ratio * grad[0]) ** 2) / n)


# Finite-sample bias correction

def _expected_periodogram(gamma0: np.ndarray, n: int) -> np.ndarray:
    """E I(lam_j) = (1/2pi) sum_{|k|<n} (1 - |k|/n) gamma0(k) exp(i k lam_j)."""
    lam = fourier_frequencies(n)
    k = np.arange(1, n)
    weights = (1.0 - k / n) * gamma0[1:n]
    return (gamma0[0] + 2.0 * np.cos(np.outer(lam, k)) @ weights) / (2.0 * np.pi)


def _inverse_f1_gradient(pair: MisSpecPair, eta: EtaVector, lam: np.ndarray) -> np.ndarray:
    """Gradient of 1/f1 in (d, beta), shape (l+1, m)."""
    u, du, _ = _inverse_g1_derivatives(pair, eta.beta, lam)
    L = _log_sine(lam)
    scale = np.exp(2.0 * eta.d * L)
    return np.vstack(([2.0 * L * u], du)) * scale


def _autocovariance_gradient(pair: MisSpecPair, eta: EtaVector, n: int) -> np.ndarray:
    """Central differences of the unit-variance model autocovariance, shape (l+1, n)."""
    x = eta.as_array()
    rows = []
    for i in range(x.size):
        step = 1e-6 * max(1.0, abs(x[i]))
        e = np.zeros(x.size)
        e[i] = step
        upper = autocovariance(pair.family.to_spec(EtaVector.from_array(x + e)), n - 1)
        lower = autocovariance(pair.family.to_spec(EtaVector.from_array(x - e)), n - 1)
        rows.append((upper - lower) / (2.0 * step))
    return np.array(rows)


def _ar_inf_gradient(pair: MisSpecPair, eta: EtaVector, n: int) -> np.ndarray:
    """Derivatives of tau_0..tau_{n-1}, shape (l+1, n)."""
    phi, theta = pair.family.split(eta.beta)
    alpha = arma_ratio_coefficients(phi, theta, n)
    frac = fractional_coefficients(eta.d, n)
    rows = [np.convolve(alpha, fractional_coefficients_derivative(eta.d, n))[:n]]
    theta_poly = lag_polynomial(theta)
    for r in range(1, len(phi) + 1):
        d_alpha = series_divide(np.eye(r + 1)[r], theta_poly, n)
        rows.append(np.convolve(d_alpha, frac)[:n])
    for r in range(1, len(theta) + 1):
        numerator = -np.polynomial.polynomial.polymul(lag_polynomial(phi), np.eye(r + 1)[r])
        d_alpha = series_divide(numerator, np.polynomial.polynomial.polymul(theta_poly, theta_poly), n)
        rows.append(np.convolve(d_alpha, frac)[:n])
    return np.array(rows)


def expected_gradient(kind: EstimatorKind, pair: MisSpecPair, eta1: EtaVector, n: int) -> np.ndarray:
    """
    Expected criterion gradient at eta1 under the true process.

    Args:
        kind: Estimator
        pair: True process and fitted family
        eta1: Pseudo-true parameter
        n: Sample size (at most settings.MAX_EXPECTED_GRADIENT_N)

    Returns:
        Vector of l + 1 expectations
    """
    if n > settings.MAX_EXPECTED_GRADIENT_N:
        raise UnsupportedN(f"n={n} exceeds {settings.MAX_EXPECTED_GRADIENT_N}")
    gamma0 = autocovariance(pair.tdgp, n - 1)

    if kind in (EstimatorKind.FML, EstimatorKind.WHITTLE):
        lam = fourier_frequencies(n)
        weighted = _inverse_f1_gradient(pair, eta1, lam) @ _expected_periodogram(gamma0, n)
        if kind == EstimatorKind.FML:
            return 2.0 * np.pi / n * weighted
        sigma2 = prediction_error_variance(pair, eta1)
        _, log_grad = _log_gradient(pair, eta1, lam)
        return 4.0 / n * log_grad.sum(axis=1) + 8.0 * np.pi / (sigma2 * n) * weighted

    if kind == EstimatorKind.TML:
        sigma2 = prediction_error_variance(pair, eta1)
        sigma_eta = linalg.toeplitz(autocovariance(pair.family.to_spec(eta1), n - 1))
        factor = linalg.cho_factor(sigma_eta)
        solved_true = linalg.cho_solve(factor, linalg.toeplitz(gamma0))
        out = np.empty(pair.family.l + 1)
        for i, d_gamma in enumerate(_autocovariance_gradient(pair, eta1, n)):
            X = linalg.cho_solve(factor, linalg.toeplitz(d_gamma))
            out[i] = np.trace(X) / n - np.sum(X * solved_true.T) / (n * sigma2)
        return out

    tau = ar_inf_coefficients(eta1, pair.family, n)
    T = linalg.toeplitz(gamma0)
    out = np.empty(pair.family.l + 1)
    for i, d_tau in enumerate(_ar_inf_gradient(pair, eta1, n)):
        block_sums = np.cumsum(np.cumsum(np.outer(tau, d_tau) * T, axis=0), axis=1)
        out[i] = 2.0 / n * np.trace(block_sums)
    return out


def criterion_curvature(kind: EstimatorKind, pair: MisSpecPair, eta1: EtaVector) -> float:
    """c with Hessian of the limiting criterion equal to -(c/2) B."""
    sigma2_0 = pair.tdgp.sigma2
    if kind == EstimatorKind.FML:
        return sigma2_0 / (2.0 * np.pi)
    if kind == EstimatorKind.CSS:
        return sigma2_0 / np.pi
    sigma2_1 = prediction_error_variance(pair, eta1)
    if kind == EstimatorKind.WHITTLE:
        return 2.0 * sigma2_0 / (np.pi * sigma2_1)
    return sigma2_0 / (np.pi * sigma2_1)


def mu_n(kind: EstimatorKind, pair: MisSpecPair, eta1: EtaVector, n: int, B: Optional[np.ndarray] = None) -> np.ndarray:
    """Bias correction -H^-1 E[grad Q_n] = (2/c) B^-1 E[grad Q_n]."""
    B = B_matrix(pair, eta1) if B is None else B
    gradient = expected_gradient(kind, pair, eta1, n)
    return 2.0 / criterion_curvature(kind, pair, eta1) * (_inverse(B) @ gradient)


# Case 1: the W-series

@lru_cache(maxsize=4096)
def _moment(a: float, m: int) -> complex:
    """int_0^1 u^(a-1) exp(2 pi i m u) du."""
    return complex(mpmath.hyp1f1(a, a + 1, 2j * mpmath.pi * m) / a)


def _sine_moment(d0: float, m: int) -> float:
    return _moment(2.0 * d0, m).imag


def _cosine_moment(d0: float, m: int) -> float:
    """int_0^1 u^(2 d0 - 1) (1 - u) cos(2 pi m u) du."""
    return (_moment(2.0 * d0, m) - _moment(2.0 * d0 + 1.0, m)).real


def _kernel_factor(j: int, k: int, u: np.ndarray) -> np.ndarray:
    """Inner integral over y of the symmetrized sine products at lag u."""
    if j == k:
        return (1.0 - u) * np.cos(2 * np.pi * j * u) + np.sin(2 * np.pi * j * u) / (2 * np.pi * j)
    sj, sk = np.sin(2 * np.pi * j * u), np.sin(2 * np.pi * k * u)
    return ((sk - sj) / (j - k) + (sk + sj) / (j + k)) / (2 * np.pi)


def cov_UV(j: int, k: int, d0: float, method: str = "closed") -> float:
    """
    Covariance of the Gaussian pair (U_j, V_k) in the W-series.

    The double integral over [0,1]^2 of the symmetrized sine products against
    |x - y|^(2 d0 - 1) reduces, with u = x - y, to a single integral whose
    inner factor is trigonometric. ``closed`` evaluates the resulting
    power-trigonometric moments through the confluent hypergeometric
    function; ``quad`` integrates in u with QUADPACK's algebraic weight.

    Args:
        j: First index, at least 1
        k: Second index, at least 1
        d0: Memory of the true process
        method: ``closed`` or ``quad``

    Returns:
        The covariance, symmetric in (j, k)
    """
    if j < 1 or k < 1:
        raise ValueError("Indices start at 1")
    if method == "quad":
        alpha = 2.0 * d0 - 1.0
        value, _ = integrate.quad(
            lambda u: _kernel_factor(j, k, np.asarray(u)), 0.0, 1.0,
            weight="alg", wvar=(alpha, 0.0), epsabs=1e-12, limit=400,
        )
        return 2.0 * float(value)
    if j == k:
        return 2.0 * (_cosine_moment(d0, j) + _sine_moment(d0, j) / (2 * np.pi * j))
    a, b = min(j, k), max(j, k)
    ms_a, ms_b = _sine_moment(d0, a), _sine_moment(d0, b)
    return ((ms_b - ms_a) / (a - b) + (ms_b + ms_a) / (a + b)) / np.pi


@lru_cache(maxsize=64)
def _covariance_table(s: int, d0: float) -> np.ndarray:
    table = np.array([[cov_UV(j, k, d0) if k >= j else 0.0 for k in range(1, s + 1)] for j in range(1, s + 1)])
    table = table + np.triu(table, 1).T
    table.setflags(write=False)
    return table


def covariance_table(s: int, d0: float) -> np.ndarray:
    """s x s matrix of cov_UV(j, k), j, k = 1..s."""
    return _covariance_table(int(s), float(d0))


def g_ratio_constant(pair: MisSpecPair, eta1: EtaVector, variant: str = "zero_frequency") -> float:
    """
    Zero-frequency constant of the W-series weights.

    ``zero_frequency`` is g0(0) / g1(beta, 0). ``sum_of_squares`` replaces
    g0(0) by the sum of squared MA coefficients over |phi0(1)|^2, which is
    1 + theta0^2 for an MA(1) true process.
    """
    phi, theta = pair.family.split(eta1.beta)
    g1_zero = float(transfer_ratio(phi, theta, 0.0))
    if variant == "zero_frequency":
        return float(_g0(pair, 0.0)) / g1_zero
    if variant == "sum_of_squares":
        ar_at_one = np.sum(pair.tdgp.ar_poly) ** 2
        return float(np.sum(pair.tdgp.ma_poly ** 2) / ar_at_one) / g1_zero
    raise ValueError(f"Unknown constant variant {variant!r}")


def w_weights(s: int, dstar: float, theta_const: float) -> np.ndarray:
    """a_j = (2 pi)^(1 - 2 d*) theta_const / j^(2 d*), j = 1..s."""
    j = np.arange(1, s + 1)
    return (2.0 * np.pi) ** (1.0 - 2.0 * dstar) * theta_const / j ** (2.0 * dstar)


def _isserlis(c_uu: float, c_uv: float, c_vu: float, c_vv: float) -> float:
    """Cov(U_j^2 + V_j^2, U_k^2 + V_k^2) for a zero-mean Gaussian vector."""
    return 2.0 * (c_uu ** 2 + c_uv ** 2 + c_vu ** 2 + c_vv ** 2)


def w_moments(j: int, k: int, d0: float, dstar: float, theta_const: float) -> Tuple[float, float]:
    """(Var W_j, Cov(W_j, W_k)) from the Gaussian fourth moments."""
    a = w_weights(max(j, k), dstar, theta_const)
    c_jj = cov_UV(j, j, d0)
    c_jk = cov_UV(j, k, d0)
    var_j = a[j - 1] ** 2 * _isserlis(c_jj, c_jj, c_jj, c_jj)
    cov_jk = a[j - 1] * a[k - 1] * _isserlis(c_jk, c_jk, c_jk, c_jk)
    return float(var_j), float(cov_jk)


def w_moments_expanded(j: int, k: int, d0: float, dstar: float, theta_const: float) -> Tuple[float, float]:
    """Expanded closed forms with unsquared cross terms; a diagnostic next to :func:`w_moments`."""
    scale = (2.0 * np.pi) ** (2.0 - 4.0 * dstar) * theta_const ** 2
    var_u = cov_UV(j, j, d0)
    var_j = 8.0 * scale / j ** (4.0 * dstar) * var_u ** 2
    cov_jk = 4.0 * scale / (j * k) ** (2.0 * dstar) * (var_u * cov_UV(k, k, d0) + 2.0 * cov_UV(j, k, d0))
    return float(var_j), float(cov_jk)


def omega_sequence(m_max: int, d0: float, dstar: float, theta_const: float) -> np.ndarray:
    """Var(sum_{j<=m} W_j) for m = 1..m_max."""
    a = w_weights(m_max, dstar, theta_const)
    C = covariance_table(m_max, d0)
    moments = 8.0 * np.outer(a, a) * C ** 2
    return np.diagonal(np.cumsum(np.cumsum(moments, axis=0), axis=1)).copy()


def omega_m(m: int, d0: float, dstar: float, theta_const: float) -> float:
    if m < 1:
        raise ValueError("m must be at least 1")
    return float(omega_sequence(m, d0, dstar, theta_const)[-1])


def select_truncation_s(S_n: float, n: int, d0: float, dstar: float, theta_const: float, b: float) -> int:
    """
    Truncation point matching the Monte Carlo variance to the series variance.

    Args:
        S_n: Sample variance of the Case 1 standardized FML estimates
        n: Sample size
        d0: Memory of the true process
        dstar: d0 - d1
        theta_const: Zero-frequency constant of the weights
        b: Scalar curvature (or 1 / (B^-1)_dd)

    Returns:
        argmin over 1 <= m < n/2 of |S_n - Omega_m / b^2|, smallest on ties
    """
    m_max = n // 2 - 1
    if m_max < 1:
        raise ValueError(f"n={n} leaves no admissible truncation point")
    gaps = np.abs(S_n - omega_sequence(m_max, d0, dstar, theta_const) / b ** 2)
    return int(np.argmin(gaps)) + 1


def build_w_sampler(s: int, d0: float, dstar: float, g_ratio: float) -> WSumSamplerSpec:
    """Cholesky factor of the 2s covariance of (U_1..U_s, V_1..V_s)."""
    C = covariance_table(s, d0)
    cov = np.block([[C, C], [C, C]])
    jitter = 0.0
    scale = float(np.mean(np.diag(cov)))
    while True:
        try:
            chol = linalg.cholesky(cov + jitter * scale * np.eye(2 * s), lower=True)
            if np.all(np.isfinite(chol)):
                break
        except linalg.LinAlgError:
            pass
        jitter = settings.JITTER_START if jitter == 0.0 else jitter * 10.0
        if jitter > 1e-2:
            raise SingularB(f"Covariance of the W-series pairs is not factorizable (s={s})")
    if jitter:
        logger.warning(f"Added relative diagonal jitter {jitter:.1e} to the W-series covariance (s={s})")
    return WSumSamplerSpec(
        s=s,
        d0=d0,
        dstar=dstar,
        scale_const=(2.0 * np.pi) ** (1.0 - 2.0 * dstar) * g_ratio,
        cov_chol=chol.tolist(),
    )


def sample_w_sum(spec: WSumSamplerSpec, count: int, seed: int) -> np.ndarray:
    """
    Draws of sum_{j<=s} W_j.

    Args:
        spec: Sampler specification
        count: Number of draws
        seed: Seed of the counter-based stream

    Returns:
        Array of count draws
    """
    chol = np.asarray(spec.cov_chol)
    s = spec.s
    a = spec.scale_const / np.arange(1, s + 1) ** (2.0 * spec.dstar)
    variances = np.sum(chol ** 2, axis=1)
    center = variances[:s] + variances[s:]
    draws = np.empty(count)
    for chunk, start in enumerate(range(0, count, _SAMPLER_CHUNK)):
        rows = min(_SAMPLER_CHUNK, count - start)
        z = standard_normals(seed, SAMPLER_STREAM_OFFSET + chunk, rows * 2 * s).reshape(rows, 2 * s)
        x = z @ chol.T
        draws[start:start + rows] = ((x[:, :s] ** 2 + x[:, s:] ** 2 - center) * a).sum(axis=1)
    return draws


# Dispatch

def build_limit_law(
    pair: MisSpecPair,
    eta1: EtaVector,
    n: int,
    kind: EstimatorKind,
    S_n: Optional[float] = None,
    w_const_variant: str = "zero_frequency",
):
    """
    Limit law of the estimator of d at sample size n.

    Args:
        pair: True process and fitted family
        eta1: Pseudo-true parameter
        n: Sample size
        kind: Estimator
        S_n: Variance of the standardized FML estimates, used to pick the
            W-series truncation point; without it s = n/2 - 1
        w_const_variant: ``zero_frequency`` or ``sum_of_squares`` weight constant

    Returns:
        Case1Law, Case2Law or Case3Law
    """
    dstar = pair.tdgp.d - eta1.d
    B = B_matrix(pair, eta1)
    B_inv = _inverse(B)
    common = {"kind": kind, "n": n, "dstar": dstar}

    if abs(dstar - 0.25) <= settings.CASE2_BAND:
        return Case2Law(b_or_B=B.tolist(), lambda_bar_dd=lambda_bar_dd(pair, eta1, n), **common)

    if dstar > 0.25:
        g_ratio = g_ratio_constant(pair, eta1, w_const_variant)
        b = 1.0 / B_inv[0, 0]
        if S_n is None:
            s = n // 2 - 1
            logger.info(f"No Monte Carlo variance supplied, using s={s}")
        else:
            s = select_truncation_s(S_n, n, pair.tdgp.d, dstar, g_ratio, b)
        return Case1Law(
            b_or_B=B.tolist(),
            mu_n=mu_n(kind, pair, eta1, n, B).tolist(),
            d0=pair.tdgp.d,
            g_ratio_const=g_ratio,
            s=s,
            sampler=build_w_sampler(s, pair.tdgp.d, dstar, g_ratio),
            **common,
        )

    Lambda = lambda_matrix(pair, eta1)
    return Case3Law(Xi=xi_matrix(B, Lambda).tolist(), B=B.tolist(), Lambda=Lambda.tolist(), **common)


def limit_law_draws(law, count: int, seed: int) -> np.ndarray:
    """Draws from the limit of the standardized estimator of d."""
    if law.case == 1:
        b_inv = _inverse(np.asarray(law.b_or_B))[0, 0]
        return b_inv * sample_w_sum(law.sampler, count, seed)
    if law.case == 2:
        scale = abs(_inverse(np.asarray(law.b_or_B))[0, 0])
    else:
        scale = float(np.sqrt(law.Xi[0][0]))
    return scale * standard_normals(seed, NORMAL_STREAM, count)


def limit_density(law, grid: np.ndarray, samples: int = 20000, seed: int = 0) -> np.ndarray:
    """Density of the limit law on a grid (kernel estimate for the W-series)."""
    grid = np.asarray(grid, dtype=float)
    if law.case == 1:
        return kernel_density(limit_law_draws(law, samples, seed), grid)
    if law.case == 2:
        scale = abs(_inverse(np.asarray(law.b_or_B))[0, 0])
    else:
        scale = float(np.sqrt(law.Xi[0][0]))
    return stats.norm.pdf(grid, scale=scale)


def kernel_density(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Gaussian kernel density with Silverman's bandwidth."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 30:
        raise DegenerateSample(f"Need at least 30 samples, got {samples.size}")
    if not np.std(samples) > 0:
        raise DegenerateSample("Samples have zero variance")
    return stats.gaussian_kde(samples, bw_method="silverman")(np.asarray(grid, dtype=float))
