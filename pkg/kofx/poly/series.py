"""Truncated multivariate power series over ``Polynomial``.

Each helper takes a polynomial ``a`` (the expansion of an argument around a
point, constant term = value at the point) and returns the expansion of
``g(a)`` truncated at ``order``. Used to Taylor-expand measurement functions.
"""

from math import comb

import numpy as np

from kofx.core.exceptions import ExpansionPointError
from kofx.poly.polynomial import Polynomial

SINGULAR_TOLERANCE = 1e-14


def _compose_series(deviation: Polynomial, coeffs: list[complex], order: int) -> Polynomial:
    """``sum_k coeffs[k] * deviation**k`` with ``deviation`` free of constant term."""
    result = Polynomial.constant(deviation.dim, coeffs[0])
    power = Polynomial.constant(deviation.dim, 1.0)
    for k in range(1, order + 1):
        power = power.multiply(deviation, max_degree=order)
        if power.is_zero():
            break
        result = result + power.scale(coeffs[k])
    return result.truncate(order)


def _split(a: Polynomial) -> tuple[complex, Polynomial]:
    a0 = a.constant_term()
    return a0, a - a0


def reciprocal(a: Polynomial, order: int) -> Polynomial:
    """``1 / a``."""
    a0, da = _split(a)
    if abs(a0) < SINGULAR_TOLERANCE:
        raise ExpansionPointError("Reciprocal expanded at a zero of its argument")
    coeffs = [(-1) ** k / a0 ** (k + 1) for k in range(order + 1)]
    return _compose_series(da, coeffs, order)


def sqrt(a: Polynomial, order: int) -> Polynomial:
    """Principal square root; requires a positive real constant term."""
    a0, da = _split(a)
    if abs(a0.imag) > SINGULAR_TOLERANCE or a0.real <= SINGULAR_TOLERANCE:
        raise ExpansionPointError(f"Square root expanded at non-positive value {a0}")
    root = a0.real**0.5
    coeffs = []
    binom = 1.0
    for k in range(order + 1):
        coeffs.append(binom * root / a0.real**k)
        binom *= (0.5 - k) / (k + 1)
    return _compose_series(da, coeffs, order)


def _arctan_zero(w: Polynomial, order: int) -> Polynomial:
    coeffs: list[complex] = [0j] * (order + 1)
    for k in range(1, order + 1, 2):
        coeffs[k] = (-1) ** ((k - 1) // 2) / k
    return _compose_series(w, coeffs, order)


def arctan(a: Polynomial, order: int) -> Polynomial:
    """``arctan(a)`` through ``arctan(a0 + d) = arctan(a0) + arctan(d / (1 + a0 (a0 + d)))``."""
    a0, da = _split(a)
    if abs(a0.imag) > SINGULAR_TOLERANCE:
        raise ExpansionPointError(f"arctan expanded at complex value {a0}")
    denominator = Polynomial.constant(a.dim, 1.0 + a0 * a0) + da.scale(a0)
    w = da.multiply(reciprocal(denominator, order), max_degree=order)
    return _arctan_zero(w, order) + float(np.arctan(a0.real))


def _arcsin_coefficients(order: int) -> list[complex]:
    coeffs: list[complex] = [0j] * (order + 1)
    for n in range((order - 1) // 2 + 1):
        k = 2 * n + 1
        if k <= order:
            coeffs[k] = comb(2 * n, n) / (4**n * k)
    return coeffs


def arcsin(a: Polynomial, order: int) -> Polynomial:
    """``arcsin(a)`` for a real constant term strictly inside (-1, 1)."""
    a0, da = _split(a)
    if abs(a0.imag) > SINGULAR_TOLERANCE or not -1.0 < a0.real < 1.0:
        raise ExpansionPointError(f"arcsin expanded at {a0}, outside (-1, 1)")

    # arcsin(a) - arcsin(a0) = arcsin(a * sqrt(1 - a0^2) - a0 * sqrt(1 - a^2))
    one_minus = Polynomial.constant(a.dim, 1.0) - a.multiply(a, max_degree=order)
    w = a.scale((1.0 - a0.real**2) ** 0.5) - sqrt(one_minus, order).scale(a0)
    w = w - w.constant_term()
    return _compose_series(w, _arcsin_coefficients(order), order) + float(np.arcsin(a0.real))
