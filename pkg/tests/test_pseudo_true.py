import time

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy.optimize import minimize
from scipy.special import gammaln

from arfima_misspec.exceptions import DOutOfRange, DStarOutOfRange
from arfima_misspec.models.arfima import ArfimaSpec, EtaVector, FamilySpec, MisSpecPair
from arfima_misspec.services.pseudo_true import (
    K_gradient,
    K_value,
    choose_truncation,
    example_pair,
    first_order_conditions,
    limiting_Q,
    limiting_Q_quadrature,
    prediction_error_variance,
    q_contour_grid,
    rho,
    solve_pseudo_true,
)


class TestRho:
    def test_first_lag(self):
        assert_allclose(rho(1, 0.3), 0.3 / 0.7)

    def test_matches_fractional_noise_autocorrelation(self):
        dstar = 0.2
        values = [rho(h, dstar) for h in range(1, 6)]
        ratios = [(h + dstar) / (h + 1 - dstar) for h in range(5)]
        assert_allclose(values, np.cumprod(ratios), rtol=1e-14)

    def test_rejects_non_positive_lag(self):
        with pytest.raises(ValueError):
            rho(0, 0.2)


class TestLimitingObjective:
    def test_series_matches_quadrature(self, rng):
        pairs = [
            example_pair(-0.7, ar_order=1),
            example_pair(-0.4, d0=0.3),
            MisSpecPair(
                tdgp=ArfimaSpec(p=1, d=0.25, q=1, phi=[-0.3], theta=[0.5]),
                family=FamilySpec(p=1, q=1),
            ),
        ]
        for pair in pairs:
            for _ in range(4):
                d = rng.uniform(pair.tdgp.d - 0.3, pair.tdgp.d + 0.2)
                beta = rng.uniform(-0.6, 0.6, size=pair.family.l)
                eta = EtaVector(d=d, beta=tuple(beta))
                series = limiting_Q(pair, 1.3, eta, choose_truncation(pair, eta.beta))
                assert_allclose(series, limiting_Q_quadrature(pair, 1.3, eta), rtol=1e-8)

    def test_gradient_matches_central_differences(self, ar_family_pair):
        eta = EtaVector(d=-0.05, beta=(0.3,))
        N = choose_truncation(ar_family_pair, eta.beta)
        analytic = K_gradient(ar_family_pair, eta, N)
        x = eta.as_array()
        numeric = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = 1e-6
            upper = K_value(ar_family_pair, EtaVector.from_array(x + e), N)
            lower = K_value(ar_family_pair, EtaVector.from_array(x - e), N)
            numeric[i] = (upper - lower) / 2e-6
        assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-9)

    def test_d_star_range(self, long_memory_pair):
        with pytest.raises(DStarOutOfRange):
            K_value(long_memory_pair, EtaVector(d=-0.35), 10)

    def test_prediction_error_variance_exceeds_innovation_variance(self, long_memory_pair, long_memory_solution):
        assert prediction_error_variance(long_memory_pair, long_memory_solution.eta1) > long_memory_pair.tdgp.sigma2


class TestTruncation:
    def test_geometric_remainder(self):
        pair = MisSpecPair(tdgp=ArfimaSpec(p=0, d=0.3, q=0), family=FamilySpec(p=0, q=1))
        eta = EtaVector(d=0.1, beta=(0.5,))
        N = choose_truncation(pair, eta.beta)
        assert abs(K_value(pair, eta, 2 * N) - K_value(pair, eta, N)) < 1e-12

    def test_decay_rate_follows_largest_root(self):
        pair = MisSpecPair(tdgp=ArfimaSpec(p=0, d=0.3, q=0), family=FamilySpec(p=0, q=1))
        eta = EtaVector(d=0.1, beta=(0.5,))
        steps = np.array([abs(K_value(pair, eta, N + 1) - K_value(pair, eta, N)) for N in range(20, 26)])
        assert_allclose(steps[1:] / steps[:-1], 0.5, rtol=0.1)

    def test_fractional_noise_family_needs_no_series(self, long_memory_pair):
        assert choose_truncation(long_memory_pair, ()) == 1


def _closed_form_minimizer(theta0: float) -> np.ndarray:
    """(d*, phi) minimizing the limit for an MA(1) process fitted by ARFIMA(1,d,0)."""

    def objective(x: np.ndarray) -> float:
        dstar, phi = x
        c = np.array([1.0, theta0 + phi, theta0 * phi])
        rho1 = dstar / (1.0 - dstar)
        rho2 = rho1 * (1.0 + dstar) / (2.0 - dstar)
        K = c @ c + 2.0 * rho1 * (c[0] * c[1] + c[1] * c[2]) + 2.0 * rho2 * c[0] * c[2]
        return float(np.exp(gammaln(1.0 - 2.0 * dstar) - 2.0 * gammaln(1.0 - dstar)) * K)

    options = {"xatol": 1e-11, "fatol": 1e-16, "maxiter": 20000, "maxfev": 40000}
    return minimize(objective, [0.2, 0.3], method="Nelder-Mead", options=options).x


class TestSolver:
    @pytest.mark.parametrize(
        "theta0, dstar",
        [(-0.7, 0.3723), (-0.444978, 0.2500), (-0.3, 0.1736)],
    )
    def test_fractional_noise_family(self, theta0, dstar):
        solution = solve_pseudo_true(example_pair(theta0))
        assert abs(solution.d_star - dstar) < 1e-3
        assert solution.grad_norm < 1e-8

    @pytest.mark.parametrize("theta0", [-0.7, -0.637014, -0.3])
    def test_autoregressive_family_matches_closed_form(self, theta0):
        solution = solve_pseudo_true(example_pair(theta0, ar_order=1))
        expected = _closed_form_minimizer(theta0)
        assert_allclose([solution.d_star, solution.eta1.beta[0]], expected, atol=1e-6)

    @pytest.mark.parametrize(
        "theta0, dstar, phi",
        [(-0.7, 0.290396, 0.334173), (-0.3, 0.067302, 0.222892)],
    )
    def test_autoregressive_family_values(self, theta0, dstar, phi):
        solution = solve_pseudo_true(example_pair(theta0, ar_order=1))
        assert abs(solution.d_star - dstar) < 1e-5
        assert abs(solution.eta1.beta[0] - phi) < 1e-5

    def test_boundary_moving_average(self):
        solution = solve_pseudo_true(example_pair(-0.637014, ar_order=1))
        assert abs(solution.d_star - 0.25) < 1e-5

    @pytest.mark.parametrize("ar_order", [0, 1])
    def test_d_star_does_not_depend_on_d0(self, ar_order):
        low = solve_pseudo_true(example_pair(-0.7, d0=0.2, ar_order=ar_order))
        high = solve_pseudo_true(example_pair(-0.7, d0=0.4, ar_order=ar_order))
        assert abs(low.d_star - high.d_star) < 1e-9
        assert_allclose(low.eta1.beta, high.eta1.beta, atol=1e-9)

    def test_autoregressive_family_is_fast(self):
        start = time.perf_counter()
        solve_pseudo_true(example_pair(-0.3, ar_order=1))
        assert time.perf_counter() - start < 2.0

    def test_first_order_conditions_vanish(self, ar_family_pair):
        solution = solve_pseudo_true(ar_family_pair)
        conditions = first_order_conditions(ar_family_pair, solution.eta1, solution.truncation_N)
        assert np.linalg.norm(conditions) < 1e-8

    def test_correct_specification_returns_true_parameter(self, correct_pair):
        solution = solve_pseudo_true(correct_pair)
        assert abs(solution.d_star) < 1e-8
        assert_allclose(solution.sigma2, correct_pair.tdgp.sigma2, rtol=1e-8)

    def test_over_parameterized_family(self):
        pair = MisSpecPair(tdgp=ArfimaSpec(p=0, d=0.2, q=0), family=FamilySpec(p=1, q=0))
        solution = solve_pseudo_true(pair)
        assert abs(solution.d_star) < 1e-6
        assert abs(solution.eta1.beta[0]) < 1e-6


class TestContour:
    def test_grid_minimum_near_solution(self, ar_family_pair):
        d_grid = np.linspace(-0.3, 0.2, 26)
        beta_grid = np.linspace(0.0, 0.7, 36)
        grid = q_contour_grid(ar_family_pair, d_grid, beta_grid)
        i, j = np.unravel_index(np.nanargmin(grid), grid.shape)
        assert abs(d_grid[i] - (0.2 - 0.2904)) <= 0.03
        assert abs(beta_grid[j] - 0.3342) <= 0.03

    def test_inadmissible_points_are_nan(self, long_memory_pair):
        grid = q_contour_grid(long_memory_pair, [-0.4, 0.0], [])
        assert grid.shape == (2, 1)
        assert np.isnan(grid[0, 0])
        assert np.isfinite(grid[1, 0])


class TestTrueProcessValidation:
    @pytest.mark.parametrize("d0", [0.0, -0.2])
    def test_pair_rejects_short_memory_true_process(self, d0):
        with pytest.raises(ValidationError):
            MisSpecPair(tdgp=ArfimaSpec(p=0, d=d0, q=1, theta=[-0.3]), family=FamilySpec())

    @pytest.mark.parametrize("d0", [0.0, -0.2])
    def test_solver_rejects_short_memory_true_process(self, d0):
        pair = MisSpecPair.model_construct(tdgp=ArfimaSpec(p=0, d=d0, q=1, theta=[-0.3]), family=FamilySpec())
        with pytest.raises(DOutOfRange):
            solve_pseudo_true(pair)
