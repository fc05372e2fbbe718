"""Circular restricted three-body problem models around L1/L2."""

from kofx.crtbp.dynamics import (
    from_libration,
    full_jacobian,
    full_rhs,
    jacobi_constant,
    legendre_recursion_Tn,
    libration_frame,
    nonlinear_potential,
    polynomial_eom,
    to_libration,
)
from kofx.crtbp.normal_form import (
    NormalFormModel,
    characteristic_rates,
    from_normal,
    hamiltonian_normal_form,
    normal_frame,
    symplectic_basis,
    to_normal,
)
from kofx.crtbp.params import (
    CRTBPParams,
    cn_coefficients,
    legendre_coefficient,
    solve_euler_quintic,
)

__all__ = [
    "CRTBPParams",
    "NormalFormModel",
    "characteristic_rates",
    "cn_coefficients",
    "from_libration",
    "from_normal",
    "full_jacobian",
    "full_rhs",
    "hamiltonian_normal_form",
    "jacobi_constant",
    "legendre_coefficient",
    "legendre_recursion_Tn",
    "libration_frame",
    "nonlinear_potential",
    "normal_frame",
    "polynomial_eom",
    "solve_euler_quintic",
    "symplectic_basis",
    "to_libration",
    "to_normal",
]
