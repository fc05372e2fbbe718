"""CRTBP equations of motion: the full model and the libration-point expansion."""

import logging
from typing import Any, List, Union

import numpy as np

from kofx.core.exceptions import ContractViolation, SingularityError
from kofx.crtbp.params import CRTBPParams, cn_coefficients
from kofx.koopman.frame import AffineFrame
from kofx.koopman.model import VectorField
from kofx.poly.basis import Domain
from kofx.poly.polynomial import Polynomial

logger = logging.getLogger(__name__)

COLLISION_DISTANCE = 1e-8


def _distances(state: Any, mu: float) -> tuple[float, float]:
    x, y, z = state[0], state[1], state[2]
    r1 = float(np.sqrt((x + mu) ** 2 + y**2 + z**2))
    r2 = float(np.sqrt((x - 1.0 + mu) ** 2 + y**2 + z**2))
    if min(r1, r2) < COLLISION_DISTANCE:
        raise SingularityError(min(r1, r2))
    return r1, r2


def full_rhs(state: Any, mu: float) -> Any:
    """Rotating-frame CRTBP accelerations with primaries at ``-mu`` and ``1 - mu``."""
    s = np.asarray(state, dtype=float)
    x, y, z, vx, vy, vz = s
    r1, r2 = _distances(s, mu)
    k1 = (1.0 - mu) / r1**3
    k2 = mu / r2**3
    ax = 2.0 * vy + x - k1 * (x + mu) - k2 * (x - 1.0 + mu)
    ay = -2.0 * vx + y - k1 * y - k2 * y
    az = -k1 * z - k2 * z
    return np.array([vx, vy, vz, ax, ay, az])


def full_jacobian(state: Any, mu: float) -> Any:
    """6x6 Jacobian of ``full_rhs`` (variational equations)."""
    s = np.asarray(state, dtype=float)
    x, y, z = s[0], s[1], s[2]
    r1, r2 = _distances(s, mu)
    d1 = np.array([x + mu, y, z])
    d2 = np.array([x - 1.0 + mu, y, z])
    hessian = (
        np.diag([1.0, 1.0, 0.0])
        - ((1.0 - mu) / r1**3 + mu / r2**3) * np.eye(3)
        + 3.0 * (1.0 - mu) * np.outer(d1, d1) / r1**5
        + 3.0 * mu * np.outer(d2, d2) / r2**5
    )
    jac = np.zeros((6, 6))
    jac[:3, 3:] = np.eye(3)
    jac[3:, :3] = hessian
    jac[3, 4] = 2.0
    jac[4, 3] = -2.0
    return jac


def jacobi_constant(state: Any, mu: float) -> float:
    """``C = 2 Omega - v^2`` with ``Omega = (x^2 + y^2)/2 + (1 - mu)/r1 + mu/r2``."""
    s = np.asarray(state, dtype=float)
    r1, r2 = _distances(s, mu)
    omega = 0.5 * (s[0] ** 2 + s[1] ** 2) + (1.0 - mu) / r1 + mu / r2
    return float(2.0 * omega - np.dot(s[3:], s[3:]))


def legendre_recursion_Tn(order: int) -> List[Polynomial]:
    """``T_n = rho^n P_n(x / rho)`` in (x, y, z) for n = 0..order.

    ``T_n = (2n - 1)/n x T_(n-1) - (n - 1)/n (x^2 + y^2 + z^2) T_(n-2)``.
    """
    if order < 1:
        raise ContractViolation(f"Recursion order must be at least 1, got {order}")
    x = Polynomial.variable(3, 0)
    rho2 = x * x + Polynomial.variable(3, 1) ** 2 + Polynomial.variable(3, 2) ** 2
    terms = [Polynomial.constant(3, 1.0), x]
    for n in range(2, order + 1):
        terms.append(
            (x * terms[n - 1]).scale((2 * n - 1) / n) - (rho2 * terms[n - 2]).scale((n - 1) / n)
        )
    return terms


def nonlinear_potential(params: CRTBPParams, first: int = 3) -> Polynomial:
    """``sum_{n=first}^{N} c_n T_n`` in the three libration position coordinates."""
    coeffs = cn_coefficients(params)
    tn = legendre_recursion_Tn(params.expansion_order)
    potential = Polynomial.zero(3)
    for n in range(first, params.expansion_order + 1):
        potential = potential + tn[n].scale(coeffs[n - 2])
    return potential


def polynomial_eom(params: CRTBPParams, domain: Union[Domain, None] = None) -> VectorField:
    """Libration-centred equations of motion truncated at the expansion order.

    State is (x, y, z, vx, vy, vz) in the scaled libration frame.
    """
    c2 = cn_coefficients(params)[0]
    potential = nonlinear_potential(params).embed(6, [0, 1, 2])
    x, y, z, vx, vy, vz = (Polynomial.variable(6, k) for k in range(6))
    components = (
        vx,
        vy,
        vz,
        vy.scale(2.0) + x.scale(1.0 + 2.0 * c2) + potential.differentiate(0),
        vx.scale(-2.0) + y.scale(1.0 - c2) + potential.differentiate(1),
        z.scale(-c2) + potential.differentiate(2),
    )
    return VectorField(components, domain or Domain.unit(6))


def libration_frame(params: CRTBPParams) -> AffineFrame:
    """Physical state to the libration frame: shift to the point, divide by gamma."""
    scale = 1.0 / params.gamma
    return AffineFrame(scale * np.eye(6), -scale * params.libration_state())


def to_libration(state: Any, params: CRTBPParams) -> Any:
    return libration_frame(params).to_model(state).real


def from_libration(state: Any, params: CRTBPParams) -> Any:
    return libration_frame(params).from_model(state).real
