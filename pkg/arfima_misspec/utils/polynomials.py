"""Lag-polynomial helpers.

Polynomials are coefficient arrays in ascending powers with a unit constant
term, ``1 + c_1 z + ... + c_k z^k`` (the plus-sign convention used across the
package).
"""
from typing import Sequence

import numpy as np
from scipy.signal import lfilter


def lag_polynomial(coefficients: Sequence[float]) -> np.ndarray:
    """Return ``[1, c_1, ..., c_k]`` for the given lag coefficients."""
    return np.concatenate(([1.0], np.asarray(coefficients, dtype=float)))


def polynomial_roots(poly: np.ndarray) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial (empty for constants)."""
    poly = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if poly.size <= 1:
        return np.array([], dtype=complex)
    return np.roots(poly[::-1])


def min_root_modulus(poly: np.ndarray) -> float:
    roots = polynomial_roots(poly)
    return float(np.min(np.abs(roots))) if roots.size else np.inf


def series_divide(numerator: np.ndarray, denominator: np.ndarray, n: int) -> np.ndarray:
    """First ``n`` power-series coefficients of ``numerator / denominator``.

    Long division is carried out as the impulse response of the rational
    filter, which is exactly the recursion of polynomial long division.
    """
    impulse = np.zeros(n)
    impulse[0] = 1.0
    return lfilter(np.asarray(numerator, dtype=float), np.asarray(denominator, dtype=float), impulse)


def pacf_to_coefficients(pacf: Sequence[float]) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to lag coefficients.

    The Durbin-Levinson recursion builds the stationary AR operator
    ``1 - a_1 z - ... - a_k z^k``; the result is returned in the plus-sign
    convention, so every output has all roots outside the unit circle.
    """
    a = np.zeros(0)
    for r in pacf:
        a = np.concatenate((a - r * a[::-1], [r]))
    return -a


def coefficients_to_pacf(coefficients: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`pacf_to_coefficients` (step-down recursion)."""
    a = -np.asarray(coefficients, dtype=float)
    pacf = np.zeros(a.size)
    for k in range(a.size - 1, -1, -1):
        r = a[k]
        pacf[k] = r
        if k:
            a = (a[:k] + r * a[:k][::-1]) / (1.0 - r * r)
    return pacf
