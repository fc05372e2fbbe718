"""Hamiltonian normal form of the libration-point expansion.

Coordinates go physical -> libration (shift and scale) -> pseudo momenta
``p = (vx - y, vy + x, vz)`` -> real symplectic eigenbasis of H2 -> complex
normal coordinates ``(q1, q2, q3, p1, p2, p3)`` in which the linear flow is
``diag(lambda1, i omega1, i omega2, -lambda1, -i omega1, -i omega2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Tuple, Union

import numpy as np

from kofx.core.exceptions import InvalidRegimeError
from kofx.crtbp.dynamics import libration_frame, nonlinear_potential
from kofx.crtbp.params import CRTBPParams, cn_coefficients
from kofx.koopman.frame import AffineFrame
from kofx.koopman.model import VectorField
from kofx.poly.basis import Domain
from kofx.poly.polynomial import Polynomial

logger = logging.getLogger(__name__)

SYMPLECTIC = np.block([[np.zeros((3, 3)), np.eye(3)], [-np.eye(3), np.zeros((3, 3))]])


def characteristic_rates(c2: float) -> Tuple[float, float, float]:
    """(lambda1, omega1, omega2) of the linearized libration dynamics."""
    disc = 9.0 * c2**2 - 8.0 * c2
    if disc < 0:
        raise InvalidRegimeError(c2)
    root = np.sqrt(disc)
    lambda_sq = 0.5 * (c2 - 2.0 + root)
    omega_sq = -0.5 * (c2 - 2.0 - root)
    if lambda_sq <= 0 or omega_sq <= 0 or c2 <= 0:
        raise InvalidRegimeError(c2)
    return float(np.sqrt(lambda_sq)), float(np.sqrt(omega_sq)), float(np.sqrt(c2))


def momentum_map() -> Any:
    """Libration velocities to pseudo momenta: ``p = v + (-y, x, 0)``."""
    m = np.eye(6)
    m[3, 1] = -1.0
    m[4, 0] = 1.0
    return m


def libration_hamiltonian(params: CRTBPParams) -> Polynomial:
    """``H = |p|^2/2 + y px - x py - sum_{n>=2} c_n T_n`` in (x, y, z, px, py, pz)."""
    c2 = cn_coefficients(params)[0]
    x, y, z, px, py, pz = (Polynomial.variable(6, k) for k in range(6))
    quadratic = (
        (px * px + py * py + pz * pz).scale(0.5)
        + y * px
        - x * py
        - (x * x - (y * y + z * z).scale(0.5)).scale(c2)
    )
    return quadratic - nonlinear_potential(params).embed(6, [0, 1, 2])


def _quadratic_matrix(hamiltonian: Polynomial) -> Any:
    """Symmetric S with ``H2 = z^T S z / 2``."""
    S = np.zeros((6, 6))
    h2 = hamiltonian.homogeneous_part(2)
    for index, coeff in h2.terms.items():
        axes = [k for k, e in enumerate(index) for _ in range(e)]
        i, j = axes
        if i == j:
            S[i, i] = 2.0 * coeff.real
        else:
            S[i, j] = S[j, i] = coeff.real
    return S


def _eigenvector(matrix: Any, target: complex) -> Any:
    values, vectors = np.linalg.eig(matrix)
    k = int(np.argmin(np.abs(values - target)))
    return vectors[:, k]


def _fix_phase(vector: Any) -> Any:
    pivot = vector[int(np.argmax(np.abs(vector)))]
    return vector * (np.conj(pivot) / abs(pivot))


def symplectic_basis(params: CRTBPParams) -> Any:
    """Real symplectic T with columns (q1, q2, q3, p1, p2, p3) diagonalizing H2.

    In the new coordinates ``H2 = lambda1 q1 p1 + omega1/2 (q2^2 + p2^2) + omega2/2 (q3^2 + p3^2)``.
    """
    c2 = cn_coefficients(params)[0]
    lam, w1, w2 = characteristic_rates(c2)
    M = SYMPLECTIC @ _quadratic_matrix(libration_hamiltonian(params))

    e1 = _eigenvector(M, lam).real
    f1 = _eigenvector(M, -lam).real
    e1 = e1 / np.linalg.norm(e1)
    f1 = f1 / np.linalg.norm(f1)
    pairing = e1 @ SYMPLECTIC @ f1
    if pairing < 0:
        f1 = -f1
        pairing = -pairing
    e1 = e1 / np.sqrt(pairing)
    f1 = f1 / np.sqrt(pairing)

    columns_q = [e1]
    columns_p = [f1]
    for omega in (w1, w2):
        vec = _fix_phase(_eigenvector(M, 1j * omega))
        a, b = vec.real, vec.imag
        norm = 2.0 * (a @ SYMPLECTIC @ b)
        if norm <= 0:
            raise InvalidRegimeError(c2)
        vec = vec / np.sqrt(norm)
        columns_q.append(np.sqrt(2.0) * vec.real)
        columns_p.append(np.sqrt(2.0) * vec.imag)
    return np.column_stack(columns_q + columns_p)


def complexification() -> Any:
    """Complex normal coordinates to real ones: ``q' = (q + i p)/sqrt 2``, ``p' = (i q + p)/sqrt 2``.

    The saddle pair (q1, p1) is left unchanged.
    """
    k = np.eye(6, dtype=complex)
    r = 1.0 / np.sqrt(2.0)
    for q, p in ((1, 4), (2, 5)):
        k[q, q], k[q, p] = r, 1j * r
        k[p, q], k[p, p] = 1j * r, r
    return k


def hamiltonian_vector_field(hamiltonian: Polynomial, domain: Domain) -> VectorField:
    """``dq/dt = dH/dp``, ``dp/dt = -dH/dq`` for six canonical variables."""
    grad = hamiltonian.gradient()
    return VectorField(tuple(grad[3:]) + tuple(-g for g in grad[:3]), domain)


@dataclass(frozen=True, eq=False)
class NormalFormModel:
    """Complex normal form of the libration expansion and the frames around it."""

    params: CRTBPParams
    lambda1: float
    omega1: float
    omega2: float
    c: Any
    hamiltonian: Polynomial
    eom: VectorField
    symplectic: Any
    frame: AffineFrame

    @property
    def linear_rates(self) -> Any:
        return np.array(
            [self.lambda1, 1j * self.omega1, 1j * self.omega2, -self.lambda1, -1j * self.omega1, -1j * self.omega2]
        )

    def with_domain(self, domain: Domain) -> NormalFormModel:
        return NormalFormModel(
            self.params,
            self.lambda1,
            self.omega1,
            self.omega2,
            self.c,
            self.hamiltonian,
            hamiltonian_vector_field(self.hamiltonian, domain),
            self.symplectic,
            self.frame,
        )


def normal_frame(params: CRTBPParams, symplectic: Union[Any, None] = None) -> AffineFrame:
    """Physical CRTBP state to complex normal coordinates."""
    T = symplectic_basis(params) if symplectic is None else symplectic
    to_canonical = np.linalg.inv(T @ complexification())
    return libration_frame(params).then(AffineFrame(to_canonical @ momentum_map(), np.zeros(6)))


def hamiltonian_normal_form(params: CRTBPParams, domain: Union[Domain, None] = None) -> NormalFormModel:
    """Normal-form Hamiltonian H3 and its complex-coefficient equations of motion."""
    c = cn_coefficients(params)
    lam, w1, w2 = characteristic_rates(c[0])
    T = symplectic_basis(params)
    substitution = T @ complexification()
    hamiltonian = libration_hamiltonian(params).compose_affine(substitution)
    eom = hamiltonian_vector_field(hamiltonian, domain or Domain.unit(6))
    logger.debug(
        f"Normal form for {params.point}: lambda1={lam:.6g}, omega1={w1:.6g}, omega2={w2:.6g}"
    )
    return NormalFormModel(
        params=params,
        lambda1=lam,
        omega1=w1,
        omega2=w2,
        c=c,
        hamiltonian=hamiltonian,
        eom=eom,
        symplectic=T,
        frame=normal_frame(params, T),
    )


def to_normal(state: Any, model: NormalFormModel) -> Any:
    return model.frame.to_model(state)


def from_normal(state: Any, model: NormalFormModel) -> Any:
    return model.frame.from_model(state).real
