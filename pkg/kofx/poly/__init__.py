"""Sparse polynomials and the normalized Legendre basis."""

from kofx.poly.basis import (
    BasisSet,
    Domain,
    gauss_legendre_grid,
    inner_product,
    legendre_poly,
    project,
    project_many,
)
from kofx.poly.polynomial import (
    MultiIndex,
    Polynomial,
    add,
    cleanup_threshold,
    differentiate,
    graded_lex_indices,
    multiply,
    scale,
    set_cleanup_threshold,
    shift_center,
)

__all__ = [
    "BasisSet",
    "Domain",
    "MultiIndex",
    "Polynomial",
    "add",
    "cleanup_threshold",
    "differentiate",
    "gauss_legendre_grid",
    "graded_lex_indices",
    "inner_product",
    "legendre_poly",
    "multiply",
    "project",
    "project_many",
    "scale",
    "set_cleanup_threshold",
    "shift_center",
]
