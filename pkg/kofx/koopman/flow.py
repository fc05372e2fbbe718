"""Analytical flow polynomials ``g(x(t)) = A C^-1 exp(Lambda t) C L(x0)``."""

import logging
from typing import Any, List, Sequence, Union

import numpy as np

from kofx.core.exceptions import ContractViolation, DomainViolationError, FlowRangeError
from kofx.koopman.model import KoopmanModel, ObservableSet, identity_observables
from kofx.poly.polynomial import Polynomial

logger = logging.getLogger(__name__)

EXP_OVERFLOW_LIMIT = 700.0
IMAG_TOLERANCE = 1e-8


def flow_coefficients(
    model: KoopmanModel,
    observables: ObservableSet,
    t: float,
    overflow_limit: float = EXP_OVERFLOW_LIMIT,
) -> Any:
    """Basis coefficients of the observables advanced by ``t``, shape (q, m)."""
    if not np.isfinite(t):
        raise ContractViolation(f"Flow time must be finite, got {t}")
    if observables.coefficients.shape[1] != model.size:
        raise ContractViolation(
            f"Observable coefficients have {observables.coefficients.shape[1]} columns, "
            f"model basis has {model.size}"
        )
    exponents = model.eigenvalues.real * t
    if exponents.size and float(np.max(exponents)) > overflow_limit:
        raise FlowRangeError(float(np.max(np.abs(model.eigenvalues.real))) * abs(t))
    growth = np.exp(model.eigenvalues * t)
    modes = model.right_solve(observables.coefficients)
    return (modes * growth[None, :]) @ model.eigenvectors


def _to_polynomials(model: KoopmanModel, coefficients: Any) -> List[Polynomial]:
    monomial = coefficients @ model.basis.monomial_matrix
    return [
        Polynomial.from_coefficients(model.dim, model.basis.indices, row) for row in monomial
    ]


def _discard_imaginary(polys: List[Polynomial], tolerance: float) -> List[Polynomial]:
    out = []
    for k, p in enumerate(polys):
        residual = p.imag_residual()
        if residual > tolerance:
            logger.warning(
                f"Observable {k}: imaginary residual {residual:.3e} above {tolerance:.0e} discarded"
            )
        out.append(p.real_part())
    return out


def flow_polynomial(
    model: KoopmanModel,
    observables: ObservableSet,
    t: float,
    real: bool = False,
    overflow_limit: float = EXP_OVERFLOW_LIMIT,
    imag_tolerance: float = IMAG_TOLERANCE,
) -> List[Polynomial]:
    """Observables at time ``t`` as polynomials in the model coordinates at time 0.

    With ``real=True`` the observables are treated as physically real and their
    imaginary residuals are dropped after a tolerance check.
    """
    coefficients = flow_coefficients(model, observables, t, overflow_limit)
    polys = _to_polynomials(model, coefficients)
    return _discard_imaginary(polys, imag_tolerance) if real else polys


def _check_center(model: KoopmanModel, center: Sequence[complex]) -> None:
    if not model.basis.domain.contains(center):
        raise DomainViolationError(center)


def shifted_flow(
    model: KoopmanModel,
    observables: ObservableSet,
    t: float,
    center: Sequence[complex],
    real: bool = False,
    overflow_limit: float = EXP_OVERFLOW_LIMIT,
    imag_tolerance: float = IMAG_TOLERANCE,
) -> List[Polynomial]:
    """Flow re-expanded in the deviation ``delta`` from ``center`` (model coordinates).

    The constant term of each polynomial is the flow evaluated at ``center``.
    """
    _check_center(model, center)
    polys = flow_polynomial(model, observables, t, False, overflow_limit)
    shifted = [p.shift(center) for p in polys]
    return _discard_imaginary(shifted, imag_tolerance) if real else shifted


def physical_flow(
    model: KoopmanModel,
    t: float,
    center: Sequence[float],
    observables: Union[ObservableSet, None] = None,
    overflow_limit: float = EXP_OVERFLOW_LIMIT,
    imag_tolerance: float = IMAG_TOLERANCE,
) -> List[Polynomial]:
    """Real flow polynomials in the physical deviation from a physical ``center``.

    Observables default to the physical state coordinates. The flow is pulled
    back through the model frame, so a complex frame still yields real output.
    """
    observables = observables or identity_observables(model)
    anchor = model.frame.to_model(center)
    _check_center(model, anchor)
    polys = flow_polynomial(model, observables, t, False, overflow_limit)
    pulled = [model.frame.pull_back(p, center) for p in polys]
    return _discard_imaginary(pulled, imag_tolerance)
