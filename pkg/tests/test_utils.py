import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from arfima_misspec.exceptions import QuadratureFailure
from arfima_misspec.utils.polynomials import (
    coefficients_to_pacf,
    lag_polynomial,
    min_root_modulus,
    pacf_to_coefficients,
    polynomial_roots,
    series_divide,
)
from arfima_misspec.utils.quadrature import singular_integral
from arfima_misspec.utils.rng import SAMPLER_STREAM_OFFSET, standard_normals


def test_lag_polynomial_prepends_unit_term():
    assert_allclose(lag_polynomial([0.5, -0.2]), [1.0, 0.5, -0.2])
    assert_allclose(lag_polynomial([]), [1.0])


def test_polynomial_roots_of_first_order_factor():
    assert_allclose(polynomial_roots(lag_polynomial([0.5])), [-2.0])
    assert polynomial_roots(lag_polynomial([])).size == 0
    assert min_root_modulus(lag_polynomial([])) == np.inf


def test_series_divide_matches_long_division():
    # (1 + 0.3 z) / (1 - 0.5 z) = 1 + 0.8 z + 0.4 z^2 + 0.2 z^3 + ...
    assert_allclose(series_divide([1.0, 0.3], [1.0, -0.5], 5), [1.0, 0.8, 0.4, 0.2, 0.1])


def test_pacf_map_lands_in_stationary_region(rng):
    for _ in range(20):
        pacf = rng.uniform(-0.95, 0.95, size=3)
        coefficients = pacf_to_coefficients(pacf)
        assert min_root_modulus(lag_polynomial(coefficients)) > 1.0
        assert_allclose(coefficients_to_pacf(coefficients), pacf, atol=1e-12)


def test_pacf_map_first_order_is_sign_flip():
    assert_allclose(pacf_to_coefficients([0.4]), [-0.4])


def test_singular_integral_power_law():
    # int_0^pi lam^-0.4 = pi^0.6 / 0.6
    value = singular_integral(lambda lam: lam ** -0.4, alpha=-0.4)
    assert_allclose(value, np.pi ** 0.6 / 0.6, rtol=1e-10)


def test_singular_integral_with_log_factor():
    # int_0^1 x^a log(x)^2 dx = 2 / (a + 1)^3
    value = singular_integral(lambda lam: lam ** -0.3 * np.log(lam) ** 2, alpha=-0.3, upper=1.0)
    assert_allclose(value, 2.0 / 0.7 ** 3, rtol=1e-8)


def test_singular_integral_matches_algebraic_weight_rule():
    func = lambda lam: np.cos(lam) * lam ** -0.6
    expected, _ = integrate.quad(np.cos, 0.0, np.pi, weight="alg", wvar=(-0.6, 0.0), epsabs=1e-13)
    assert_allclose(singular_integral(func, alpha=-0.6), expected, rtol=1e-9)


def test_singular_integral_rejects_non_integrable_exponent():
    with pytest.raises(QuadratureFailure):
        singular_integral(lambda lam: 1.0 / lam, alpha=-1.0)


def test_standard_normals_are_reproducible():
    first = standard_normals(7, 3, 100)
    assert np.array_equal(first, standard_normals(7, 3, 100))
    assert not np.array_equal(first, standard_normals(7, 4, 100))
    assert not np.array_equal(first, standard_normals(8, 3, 100))


def test_standard_normals_prefix_property():
    assert np.array_equal(standard_normals(1, 0, 50), standard_normals(1, 0, 80)[:50])


def test_standard_normals_moments():
    z = standard_normals(123, SAMPLER_STREAM_OFFSET, 200_000)
    assert abs(z.mean()) < 4.0 / np.sqrt(z.size)
    assert abs(z.var() - 1.0) < 0.02
    assert np.all(np.isfinite(z))
