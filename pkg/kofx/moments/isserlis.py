"""Closed-form moments of a zero-mean Gaussian."""

import logging
from typing import Any, Dict, Sequence, Union

import numpy as np

from kofx.core.exceptions import ContractViolation, OrderCapError
from kofx.poly.polynomial import MultiIndex, Polynomial

logger = logging.getLogger(__name__)

DEFAULT_ORDER_CAP = 8
IMAG_TOLERANCE = 1e-8
SYMMETRY_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10


def check_covariance(covariance: Any, dim: Union[int, None] = None) -> Any:
    """Return the covariance as an array after symmetry and PSD checks."""
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ContractViolation(f"Covariance must be square, got shape {cov.shape}")
    if dim is not None and cov.shape[0] != dim:
        raise ContractViolation(f"Covariance is {cov.shape[0]}-d, expected {dim}")
    if not np.all(np.isfinite(cov)):
        raise ContractViolation("Covariance has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOLERANCE * scale:
        raise ContractViolation("Covariance is not symmetric")
    trace = float(np.trace(cov))
    min_eig = float(np.min(np.linalg.eigvalsh(cov)))
    if min_eig < -PSD_TOLERANCE * max(trace, 0.0):
        raise ContractViolation(
            f"Covariance is not positive semi-definite (min eigenvalue {min_eig:.3e})",
            details={"min_eigenvalue": min_eig, "trace": trace},
        )
    return cov


class IsserlisTable:
    """Memoized ``E[prod dx_i^alpha_i]`` for ``dx ~ N(0, covariance)``.

    Uses the recursion ``E[x_i x^b] = sum_j b_j P_ij E[x^(b - e_j)]`` with i the
    first variable present in alpha; each multi-index is evaluated once.
    """

    def __init__(self, covariance: Any, cap: int = DEFAULT_ORDER_CAP) -> None:
        cov = np.atleast_2d(np.asarray(covariance, dtype=float))
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ContractViolation(f"Covariance must be square, got shape {cov.shape}")
        self.covariance = cov
        self.dim = cov.shape[0]
        self.cap = cap
        self._memo: Dict[MultiIndex, float] = {(0,) * self.dim: 1.0}

    def __len__(self) -> int:
        return len(self._memo)

    def moment(self, alpha: Sequence[int]) -> float:
        key = tuple(int(a) for a in alpha)
        if len(key) != self.dim or any(a < 0 for a in key):
            raise ContractViolation(f"Multi-index {key} invalid for dimension {self.dim}")
        order = sum(key)
        if order > self.cap:
            raise OrderCapError(order, self.cap)
        if order % 2:
            return 0.0
        return self._moment(key)

    def _moment(self, key: MultiIndex) -> float:
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        i = next(k for k, a in enumerate(key) if a)
        rest = list(key)
        rest[i] -= 1
        value = 0.0
        for j, count in enumerate(rest):
            if count == 0 or self.covariance[i, j] == 0.0:
                continue
            reduced = rest.copy()
            reduced[j] -= 1
            value += count * self.covariance[i, j] * self._moment(tuple(reduced))
        self._memo[key] = value
        return value


def isserlis_moment(
    alpha: Sequence[int], covariance: Any, cap: int = DEFAULT_ORDER_CAP
) -> float:
    """``E[prod dx_i^alpha_i]`` for ``dx ~ N(0, covariance)``; zero for odd orders."""
    return IsserlisTable(check_covariance(covariance), cap).moment(alpha)


def check_real(poly: Polynomial, tolerance: float = IMAG_TOLERANCE) -> None:
    residual = poly.imag_residual()
    if residual > tolerance:
        raise ContractViolation(
            f"Polynomial is not real: imaginary residual {residual:.3e} above {tolerance:.0e}"
        )


def expect_polynomial(
    poly: Polynomial,
    covariance: Any,
    cap: int = DEFAULT_ORDER_CAP,
    table: Union[IsserlisTable, None] = None,
) -> float:
    """``E[p(dx)]`` for ``dx ~ N(0, covariance)`` by linearity over monomials."""
    check_real(poly)
    table = table or IsserlisTable(check_covariance(covariance), cap)
    if poly.dim != table.dim:
        raise ContractViolation(f"Polynomial has {poly.dim} variables, covariance is {table.dim}-d")
    return float(sum(c.real * table.moment(k) for k, c in poly.terms.items()))
