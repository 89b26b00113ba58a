"""Limiting objective of the mis-specified fit and its minimizer.

With C(z) = A(z)/B(z), A = theta0 * phi and B = phi0 * theta, the limit of
every criterion is proportional to

    Gamma(1 - 2 d*) / Gamma(1 - d*)^2 * K(eta),
    K(eta) = sum_j c_j^2 + 2 sum_{j>k} c_j c_k rho(j - k),

where d* = d0 - d and rho is the autocorrelation of fractional noise with
memory d*. K is evaluated from the power series of C truncated at N terms.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg
from scipy.optimize import minimize
from scipy.special import digamma, gammaln

from arfima_misspec.config import settings
from arfima_misspec.exceptions import BoundaryRoot, DStarOutOfRange, NoRoot
from arfima_misspec.models.arfima import ArfimaSpec, EtaVector, FamilySpec, MisSpecPair
from arfima_misspec.models.results import PseudoTrueSolution
from arfima_misspec.services.arfima_model import long_memory_factor, transfer_ratio, validate_spec
from arfima_misspec.utils.polynomials import (
    lag_polynomial,
    min_root_modulus,
    pacf_to_coefficients,
    polynomial_roots,
    series_divide,
)
from arfima_misspec.utils.quadrature import singular_integral

logger = logging.getLogger(__name__)

_START_D = (0.05, 0.15, 0.25, 0.35, 0.45)
_START_PACF = (-0.6, 0.0, 0.6)
_PILOT_FLOOR = 1e-17
_BASIN_RADIUS = 1e-4


def example_pair(theta0: float, d0: float = 0.2, ar_order: int = 0, sigma2: float = 1.0) -> MisSpecPair:
    """ARFIMA(0,d0,1) true process against an ARFIMA(ar_order,d,0) family."""
    tdgp = ArfimaSpec(p=0, d=d0, q=1, theta=(theta0,), sigma2=sigma2)
    return MisSpecPair(tdgp=validate_spec(tdgp, long_memory=True), family=FamilySpec(p=ar_order, q=0))


def rho(h: int, dstar: float) -> float:
    """prod_{i=1}^h (d* + i - 1) / (i - d*)."""
    if h < 1:
        raise ValueError("h must be positive")
    value = 1.0
    for i in range(1, h + 1):
        value *= (dstar + i - 1) / (i - dstar)
    return value


def _rho_table(N: int, dstar: float) -> Tuple[np.ndarray, np.ndarray]:
    """rho(0..N) and its derivative in d*, both built incrementally."""
    values = np.empty(N + 1)
    derivs = np.empty(N + 1)
    values[0], derivs[0] = 1.0, 0.0
    for h in range(1, N + 1):
        ratio = (dstar + h - 1) / (h - dstar)
        ratio_deriv = (2 * h - 1) / (h - dstar) ** 2
        values[h] = values[h - 1] * ratio
        derivs[h] = derivs[h - 1] * ratio + values[h - 1] * ratio_deriv
    return values, derivs


def _dstar(pair: MisSpecPair, d: float) -> float:
    dstar = pair.tdgp.d - d
    if not abs(dstar) < 0.5:
        raise DStarOutOfRange(f"d0 - d = {dstar} outside (-0.5, 0.5)")
    return dstar


def _polynomials(pair: MisSpecPair, beta: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    phi, theta = pair.family.split(beta)
    A = P.polymul(pair.tdgp.ma_poly, lag_polynomial(phi))
    B = P.polymul(pair.tdgp.ar_poly, lag_polynomial(theta))
    return A, B


def c_coefficients(pair: MisSpecPair, beta: Sequence[float], N: int) -> np.ndarray:
    """Power series c_0..c_N of A_beta(z) / B_beta(z)."""
    A, B = _polynomials(pair, beta)
    if N < len(A) - 1:
        raise ValueError(f"N={N} is below deg A = {len(A) - 1}")
    return series_divide(A, B, N + 1)


def _c_derivatives(pair: MisSpecPair, beta: Sequence[float], N: int) -> np.ndarray:
    """d c_j / d beta_r for every short-memory parameter, shape (l, N+1)."""
    A, B = _polynomials(pair, beta)
    family = pair.family
    rows = []
    for r in range(1, family.p + 1):
        numerator = P.polymul(pair.tdgp.ma_poly, np.eye(r + 1)[r])
        rows.append(series_divide(numerator, B, N + 1))
    for r in range(1, family.q + 1):
        numerator = -P.polymul(P.polymul(A, pair.tdgp.ar_poly), np.eye(r + 1)[r])
        rows.append(series_divide(numerator, P.polymul(B, B), N + 1))
    return np.array(rows).reshape(family.l, N + 1)


def _lagged_products(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """sum_k a_{k+h} b_k for h = 0..N."""
    N = len(a) - 1
    return np.correlate(a, b, mode="full")[N:]


def K_value(pair: MisSpecPair, eta: EtaVector, N: int) -> float:
    """Truncated K_N(eta)."""
    dstar = _dstar(pair, eta.d)
    c = c_coefficients(pair, eta.beta, N)
    rho_values, _ = _rho_table(N, dstar)
    r = _lagged_products(c, c)
    return float(r[0] + 2.0 * np.dot(rho_values[1:], r[1:]))


def K_gradient(pair: MisSpecPair, eta: EtaVector, N: int) -> np.ndarray:
    """
    Gradient of K_N with respect to (d, beta_1..beta_l).

    Args:
        pair: True process and fitted family
        eta: Point of evaluation
        N: Truncation order

    Returns:
        Array of l + 1 partial derivatives
    """
    dstar = _dstar(pair, eta.d)
    c = c_coefficients(pair, eta.beta, N)
    rho_values, rho_derivs = _rho_table(N, dstar)
    r = _lagged_products(c, c)
    grad = np.empty(pair.family.l + 1)
    # d* = d0 - d
    grad[0] = -2.0 * np.dot(rho_derivs[1:], r[1:])
    weights = np.concatenate(([1.0], 2.0 * rho_values[1:]))
    for i, dc in enumerate(_c_derivatives(pair, eta.beta, N)):
        dr = _lagged_products(dc, c) + _lagged_products(c, dc)
        grad[i + 1] = np.dot(weights, dr)
    return grad


def gamma_prefactor(dstar: float) -> float:
    """Gamma(1 - 2 d*) / Gamma(1 - d*)^2."""
    return float(np.exp(gammaln(1.0 - 2.0 * dstar) - 2.0 * gammaln(1.0 - dstar)))


def limiting_Q(pair: MisSpecPair, sigma2: float, eta: EtaVector, N: int) -> float:
    """pi (sigma0^2 / sigma2) Gamma(1-2d*) / Gamma(1-d*)^2 K_N(eta)."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    dstar = _dstar(pair, eta.d)
    return np.pi * pair.tdgp.sigma2 / sigma2 * gamma_prefactor(dstar) * K_value(pair, eta, N)


def spectral_ratio_integral(pair: MisSpecPair, eta: EtaVector) -> float:
    """int_0^pi (g0 / g1) (2 sin(lam/2))^(-2 d*) dlam by singular quadrature."""
    dstar = _dstar(pair, eta.d)
    phi, theta = pair.family.split(eta.beta)
    tdgp = pair.tdgp

    def integrand(lam: float) -> float:
        g0 = transfer_ratio(tdgp.phi, tdgp.theta, lam)
        g1 = transfer_ratio(phi, theta, lam)
        return float(g0 / g1 * long_memory_factor(dstar, lam))

    return singular_integral(integrand, alpha=-2.0 * dstar)


def limiting_Q_quadrature(pair: MisSpecPair, sigma2: float, eta: EtaVector) -> float:
    """The limiting objective as an integral over frequencies, without the series."""
    return pair.tdgp.sigma2 / sigma2 * spectral_ratio_integral(pair, eta)


def prediction_error_variance(pair: MisSpecPair, eta: EtaVector, N: Optional[int] = None) -> float:
    """One-step mean-square prediction error of the fitted model, 2 Q(eta)."""
    N = choose_truncation(pair, eta.beta) if N is None else N
    return limiting_Q(pair, pair.tdgp.sigma2, eta, N) * pair.tdgp.sigma2 / np.pi


def first_order_conditions(pair: MisSpecPair, eta: EtaVector, N: int) -> np.ndarray:
    """Stacked conditions: 2(psi(1-2d*) - psi(1-d*)) K + dK/dd and dK/dbeta."""
    dstar = _dstar(pair, eta.d)
    grad = K_gradient(pair, eta, N)
    grad[0] += 2.0 * (digamma(1.0 - 2.0 * dstar) - digamma(1.0 - dstar)) * K_value(pair, eta, N)
    return grad


def choose_truncation(pair: MisSpecPair, beta: Sequence[float], tol: float = None) -> int:
    """
    Truncation order for K_N with a geometric remainder below tol.

    zeta is the largest reciprocal root modulus of B_beta. With C the sum of
    |c_j| over a pilot expansion, N is the smallest order with
    2 C^2 zeta^(N+1) / (1 - zeta) < tol, which bounds every cross term of the
    discarded tail.

    Args:
        pair: True process and fitted family
        beta: Short-memory parameters of the fitted model
        tol: Remainder tolerance

    Returns:
        Truncation order N >= deg A
    """
    tol = settings.TRUNCATION_TOL if tol is None else tol
    A, B = _polynomials(pair, beta)
    degree = len(A) - 1
    roots = polynomial_roots(B)
    if roots.size == 0:
        return degree
    zeta = float(np.max(1.0 / np.abs(roots)))
    pilot = int(min(settings.TRUNCATION_CAP, degree + 1 + np.ceil(np.log(_PILOT_FLOOR) / np.log(zeta))))
    C = float(np.sum(np.abs(series_divide(A, B, pilot))))
    scale = 2.0 * C * C / (1.0 - zeta)
    N = max(degree, int(np.floor(np.log(tol / scale) / np.log(zeta))) - 1)
    while scale * zeta ** (N + 1) >= tol:
        N += 1
    if N > settings.TRUNCATION_CAP:
        logger.warning(f"Truncation order {N} capped at {settings.TRUNCATION_CAP} (zeta={zeta:.6f})")
        N = settings.TRUNCATION_CAP
    return N


def _admissible(pair: MisSpecPair, x: np.ndarray) -> bool:
    if not (abs(pair.tdgp.d - x[0]) < 0.5 - 1e-9 and abs(x[0]) < 0.5):
        return False
    phi, theta = pair.family.split(x[1:])
    bound = 1.0 + settings.STATIONARITY_MARGIN
    return min_root_modulus(lag_polynomial(phi)) > bound and min_root_modulus(lag_polynomial(theta)) > bound


class _System:
    """First-order conditions as a function of the raw vector x = (d, beta)."""

    def __init__(self, pair: MisSpecPair, truncation_tol: float):
        self.pair = pair
        self.truncation_tol = truncation_tol
        self._orders = {}

    def truncation(self, x: np.ndarray) -> int:
        # Orders are cached per 1e-3 cell of beta.
        key = tuple(np.round(x[1:], 3))
        if key not in self._orders:
            self._orders[key] = choose_truncation(self.pair, x[1:], self.truncation_tol)
        return self._orders[key]

    def residual(self, x: np.ndarray) -> np.ndarray:
        return first_order_conditions(self.pair, EtaVector.from_array(x), self.truncation(x))

    def objective(self, x: np.ndarray) -> float:
        eta = EtaVector.from_array(x)
        return gamma_prefactor(self.pair.tdgp.d - x[0]) * K_value(self.pair, eta, self.truncation(x))

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        size = x.size
        jac = np.empty((size, size))
        for i in range(size):
            step = 1e-6 * max(1.0, abs(x[i]))
            e = np.zeros(size)
            e[i] = step
            jac[:, i] = (self.residual(x + e) - self.residual(x - e)) / (2.0 * step)
        return jac


def _newton(
    system: _System,
    x: np.ndarray,
    tol: float,
    max_iter: int,
    known: Sequence[np.ndarray] = (),
) -> Tuple[np.ndarray, np.ndarray, int, bool]:
    g = system.residual(x)
    for iteration in range(max_iter):
        if np.linalg.norm(g) < tol:
            return x, g, iteration, True
        for root in known:
            if np.max(np.abs(x - root)) < _BASIN_RADIUS:
                return root, system.residual(root), iteration, True
        jac = system.jacobian(x)
        try:
            step = -linalg.solve(jac, g)
        except linalg.LinAlgError:
            step = -linalg.lstsq(jac, g)[0]
        t = 1.0
        for _ in range(40):
            candidate = x + t * step
            if _admissible(system.pair, candidate):
                g_candidate = system.residual(candidate)
                if np.linalg.norm(g_candidate) < np.linalg.norm(g):
                    x, g = candidate, g_candidate
                    break
            t *= 0.5
        else:
            return x, g, iteration, False
    return x, g, max_iter, bool(np.linalg.norm(g) < tol)


def _residual_descent(system: _System, x: np.ndarray) -> np.ndarray:
    """Derivative-free minimization of the squared residual norm."""

    def target(z: np.ndarray) -> float:
        if not _admissible(system.pair, z):
            return np.inf
        return float(np.sum(system.residual(z) ** 2))

    result = minimize(target, x, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-26, "maxiter": 4000})
    return result.x


def _is_local_minimum(system: _System, x: np.ndarray, step: float = 1e-4) -> bool:
    base = system.objective(x)
    for i in range(x.size):
        for sign in (1.0, -1.0):
            probe = x.copy()
            probe[i] += sign * step
            if _admissible(system.pair, probe) and system.objective(probe) < base - 1e-14 * abs(base):
                return False
    return True


def _starting_points(pair: MisSpecPair) -> List[np.ndarray]:
    family = pair.family
    if family.l:
        grid = np.array(np.meshgrid(*([_START_PACF] * family.l), indexing="ij")).reshape(family.l, -1).T
    else:
        grid = np.zeros((1, 0))
    points = []
    d0 = pair.tdgp.d
    for d in sorted(set(_START_D) | {round(d0 - 0.3, 12), round(d0 - 0.4, 12)}):
        if not (abs(d0 - d) < 0.5 and abs(d) < 0.5):
            continue
        for pacf in grid:
            beta = np.concatenate((pacf_to_coefficients(pacf[: family.p]), pacf_to_coefficients(pacf[family.p:])))
            points.append(np.concatenate(([d], beta)))
    return points


def solve_pseudo_true(
    pair: MisSpecPair,
    tol: float = None,
    truncation_tol: float = None,
    max_iter: int = None,
) -> PseudoTrueSolution:
    """
    Solve the first-order conditions of the limiting objective.

    Damped Newton with a finite-difference Jacobian of the analytic
    conditions, started from a grid over d and partial autocorrelations of
    beta. Iterates that reach a root already found stop there. If no start
    converges, the stalled ones are continued by minimizing the squared
    residual and polished by Newton again. Converged points that fail a coordinate
    minimality check are discarded.

    Args:
        pair: True process and fitted family
        tol: Residual norm tolerance
        truncation_tol: Series remainder tolerance
        max_iter: Newton iteration cap per start

    Returns:
        PseudoTrueSolution at the unique local minimizer found
    """
    tol = settings.NEWTON_TOL if tol is None else tol
    truncation_tol = settings.TRUNCATION_TOL if truncation_tol is None else truncation_tol
    max_iter = settings.NEWTON_MAX_ITER if max_iter is None else max_iter
    validate_spec(pair.tdgp, long_memory=True)
    system = _System(pair, truncation_tol)

    roots = []
    stalled = []

    def accept(x: np.ndarray, g: np.ndarray, iterations: int) -> None:
        if any(np.max(np.abs(x - root[0])) < 1e-6 for root in roots):
            return
        if _is_local_minimum(system, x):
            roots.append((x, g, iterations))

    for x0 in _starting_points(pair):
        try:
            x, g, iterations, converged = _newton(system, x0, tol, max_iter, [root[0] for root in roots])
        except (DStarOutOfRange, linalg.LinAlgError, ValueError) as e:
            logger.debug(f"Start {x0} abandoned: {str(e)}")
            continue
        if converged:
            accept(x, g, iterations)
        else:
            stalled.append((x, iterations))

    # Stalled starts are continued only when no start converged.
    if not roots:
        for x, iterations in stalled:
            try:
                x = _residual_descent(system, x)
                x, g, more, converged = _newton(system, x, tol, max_iter)
            except (DStarOutOfRange, linalg.LinAlgError, ValueError) as e:
                logger.debug(f"Continuation from {x} abandoned: {str(e)}")
                continue
            if converged:
                accept(x, g, iterations + more)

    if not roots:
        raise NoRoot("No interior minimizer of the limiting objective was found")
    if len(roots) > 1:
        found = [root[0].tolist() for root in roots]
        logger.error(f"Multiple pseudo-true candidates: {found}")
        raise NoRoot(f"{len(roots)} distinct minimizers found: {found}", roots=found)

    x, g, iterations = roots[0]
    eta1 = EtaVector.from_array(x)
    if not settings.D_LOWER < eta1.d < settings.D_UPPER:
        raise BoundaryRoot(f"Pseudo-true d1={eta1.d:.6f} outside ({settings.D_LOWER}, {settings.D_UPPER})")
    N = system.truncation(x)
    solution = PseudoTrueSolution(
        eta1=eta1,
        d_star=pair.tdgp.d - eta1.d,
        K=K_value(pair, eta1, N),
        grad_norm=float(np.linalg.norm(g)),
        truncation_N=N,
        newton_iters=iterations,
        sigma2=prediction_error_variance(pair, eta1, N),
    )
    logger.info(f"Pseudo-true solution d1={eta1.d:.6f}, beta={eta1.beta}, d*={solution.d_star:.6f}")
    return solution


def q_contour_grid(
    pair: MisSpecPair,
    d_grid: Sequence[float],
    beta_grid: Sequence[float],
    beta_rest: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Limiting objective at sigma2 = sigma0^2 over a (d, beta_1) grid.

    Args:
        pair: True process and fitted family
        d_grid: Values of d (rows)
        beta_grid: Values of the first short-memory parameter (columns);
            ignored for families without one
        beta_rest: Fixed values of beta_2..beta_l

    Returns:
        Matrix of Q values, NaN where the point is not admissible
    """
    l = pair.family.l
    rest = np.zeros(max(l - 1, 0)) if beta_rest is None else np.asarray(beta_rest, dtype=float)
    columns = list(beta_grid) if l else [None]
    grid = np.full((len(d_grid), len(columns)), np.nan)
    for i, d in enumerate(d_grid):
        for j, b in enumerate(columns):
            x = np.concatenate(([d], [] if b is None else [b], rest))
            if not _admissible(pair, x):
                continue
            eta = EtaVector.from_array(x)
            grid[i, j] = limiting_Q(pair, pair.tdgp.sigma2, eta, choose_truncation(pair, eta.beta))
    return grid
