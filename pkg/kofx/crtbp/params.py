"""CRTBP system parameters and collinear libration point geometry."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from kofx.core.exceptions import ParameterError

logger = logging.getLogger(__name__)

LibrationPoint = Literal["L1", "L2"]

QUINTIC_TOLERANCE = 1e-12
MAX_ITERATIONS = 200


def _quintic(mu: float, point: str) -> Any:
    """Coefficients of the Euler quintic, highest power first."""
    if point == "L1":
        return np.array([1.0, -(3.0 - mu), 3.0 - 2.0 * mu, -mu, 2.0 * mu, -mu])
    return np.array([1.0, 3.0 - mu, 3.0 - 2.0 * mu, -mu, -2.0 * mu, -mu])


def _check(mu: float, point: str) -> None:
    if not 0.0 < mu < 0.5:
        raise ParameterError(f"Mass ratio must satisfy 0 < mu < 1/2, got {mu}")
    if point not in ("L1", "L2"):
        raise ParameterError(f"Libration point must be 'L1' or 'L2', got {point!r}")


def solve_euler_quintic(mu: float, point: str = "L1") -> float:
    """Distance gamma between the libration point and the secondary.

    Newton iteration seeded at the Hill radius ``(mu/3)^(1/3)``; any step that
    leaves the current bracket falls back to bisection.
    """
    _check(mu, point)
    coeffs = _quintic(mu, point)
    deriv = np.polyder(coeffs)
    lo, hi = 0.0, 1.0
    f_lo = np.polyval(coeffs, lo)
    if f_lo * np.polyval(coeffs, hi) > 0:
        raise ParameterError(f"Euler quintic has no root bracketed in (0, 1) for mu={mu}")

    gamma = (mu / 3.0) ** (1.0 / 3.0)
    for iteration in range(MAX_ITERATIONS):
        value = np.polyval(coeffs, gamma)
        if value == 0.0:
            break
        if value * f_lo < 0:
            hi = gamma
        else:
            lo, f_lo = gamma, value
        slope = np.polyval(deriv, gamma)
        step = value / slope if slope != 0.0 else np.inf
        candidate = gamma - step
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - gamma) <= 4.0 * np.finfo(float).eps * max(gamma, 1e-300):
            gamma = candidate
            break
        gamma = candidate
    else:
        raise ParameterError(f"Euler quintic did not converge for mu={mu}")

    residual = abs(np.polyval(coeffs, gamma))
    if residual > QUINTIC_TOLERANCE:
        raise ParameterError(f"Euler quintic residual {residual:.3e} at gamma={gamma}")
    logger.debug(f"{point} gamma={gamma:.15f} for mu={mu} after {iteration + 1} iterations")
    return float(gamma)


@dataclass(frozen=True)
class CRTBPParams:
    """Mass ratio, libration point and expansion order of a CRTBP model."""

    mu: float
    point: LibrationPoint = "L1"
    expansion_order: int = 4
    gamma: float = field(init=False)

    def __post_init__(self) -> None:
        _check(self.mu, self.point)
        if self.expansion_order < 2:
            raise ParameterError(f"Expansion order must be at least 2, got {self.expansion_order}")
        object.__setattr__(self, "gamma", solve_euler_quintic(self.mu, self.point))

    @property
    def sign(self) -> int:
        """+1 for L1 (upper signs), -1 for L2."""
        return 1 if self.point == "L1" else -1

    @property
    def libration_x(self) -> float:
        """x of the libration point in the barycentric rotating frame."""
        return 1.0 - self.mu - self.sign * self.gamma

    def libration_state(self) -> Any:
        return np.array([self.libration_x, 0.0, 0.0, 0.0, 0.0, 0.0])

    def with_order(self, expansion_order: int) -> CRTBPParams:
        return CRTBPParams(self.mu, self.point, expansion_order)


def legendre_coefficient(n: int, mu: float, gamma: float, point: str = "L1") -> float:
    """``c_n = gamma^-3 ((+-1)^n mu + (-1)^n (1 - mu) gamma^(n+1) / (1 -+ gamma)^(n+1))``.

    Upper signs for L1, lower for L2. Accepts ``mu = 0`` for the limiting case.
    """
    s = 1 if point == "L1" else -1
    return float(
        (s**n * mu + (-1) ** n * (1.0 - mu) * gamma ** (n + 1) / (1.0 - s * gamma) ** (n + 1))
        / gamma**3
    )


def cn_coefficients(params: CRTBPParams) -> Any:
    """``c_2 .. c_N`` for the parameters (array index 0 holds c_2)."""
    return np.array(
        [
            legendre_coefficient(n, params.mu, params.gamma, params.point)
            for n in range(2, params.expansion_order + 1)
        ]
    )
