"""Normalized Legendre basis on a hyperbox and the L2 machinery built on it."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre as npleg

from kofx.core.exceptions import ContractViolation
from kofx.poly.polynomial import MultiIndex, Polynomial, graded_lex_indices, validate_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[lower, upper]``; the Legendre basis is mapped onto it."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self) -> None:
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ContractViolation("Domain bounds must be non-empty and of equal length")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ContractViolation(
                "Domain lower bounds must be strictly below upper bounds",
                details={"lower": list(lower), "upper": list(upper)},
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def symmetric(cls, half_widths: Sequence[float], center: Sequence[float] | None = None) -> Domain:
        widths = np.asarray(half_widths, dtype=float)
        mid = np.zeros_like(widths) if center is None else np.asarray(center, dtype=float)
        return cls(tuple(mid - widths), tuple(mid + widths))

    @classmethod
    def unit(cls, dim: int) -> Domain:
        """The native Legendre box [-1, 1]^dim."""
        return cls((-1.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> Any:
        return (np.asarray(self.upper) + np.asarray(self.lower)) / 2.0

    @property
    def half_width(self) -> Any:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / 2.0

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))

    def contains(self, point: Sequence[complex]) -> bool:
        """Real and imaginary parts must both lie within the box."""
        pt = np.asarray(point, dtype=complex)
        if pt.shape != (self.dim,):
            raise ContractViolation(f"Point has shape {pt.shape}, expected ({self.dim},)")
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return bool(
            np.all((pt.real >= lo) & (pt.real <= hi)) and np.all((pt.imag >= lo) & (pt.imag <= hi))
        )

    def monomial_integral(self, index: MultiIndex) -> float:
        """Exact integral of the monomial ``x^index`` over the box."""
        value = 1.0
        for k, lo, hi in zip(index, self.lower, self.upper):
            value *= (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
        return value

    def to_dict(self) -> Dict[str, List[float]]:
        return {"lower": list(self.lower), "upper": list(self.upper)}


def _legendre_1d(n: int, lower: float, upper: float) -> Polynomial:
    """Normalized degree-n Legendre polynomial on [lower, upper] in one variable."""
    power_coeffs = npleg.leg2poly([0.0] * n + [1.0])
    in_u = Polynomial(1, {(k,): c for k, c in enumerate(power_coeffs)})
    scale = 2.0 / (upper - lower)
    shift = -(upper + lower) / (upper - lower)
    norm = np.sqrt((2 * n + 1) / (upper - lower))
    return in_u.compose_affine([[scale]], [shift]).scale(norm)


def legendre_poly(index: Sequence[int], domain: Domain) -> Polynomial:
    """Product of per-axis normalized Legendre polynomials, unit norm on ``domain``."""
    exps = validate_index(index, domain.dim)
    result = Polynomial.constant(domain.dim, 1.0)
    for axis, (n, lo, hi) in enumerate(zip(exps, domain.lower, domain.upper)):
        factor = _legendre_1d(n, lo, hi).embed(domain.dim, [axis])
        result = result * factor
    return result


def _integrate_analytic(poly: Polynomial, domain: Domain) -> complex:
    return sum(
        (c * domain.monomial_integral(k) for k, c in poly.terms.items()), start=0j
    )


def gauss_legendre_grid(domain: Domain, order: int) -> Tuple[Any, Any]:
    """Tensor Gauss-Legendre nodes (n^d, d) and weights mapped onto the box."""
    nodes, weights = npleg.leggauss(order)
    axes_nodes = []
    axes_weights = []
    for lo, hi in zip(domain.lower, domain.upper):
        half = (hi - lo) / 2.0
        axes_nodes.append(half * nodes + (hi + lo) / 2.0)
        axes_weights.append(half * weights)
    grid = np.array(list(itertools.product(*axes_nodes)))
    grid_weights = np.array([np.prod(w) for w in itertools.product(*axes_weights)])
    return grid, grid_weights


def _integrate_quadrature(poly: Polynomial, domain: Domain, order: int) -> complex:
    if poly.is_zero():
        return 0j
    grid, weights = gauss_legendre_grid(domain, order)
    return complex(np.dot(weights, poly.evaluate(grid)))


def inner_product(f: Polynomial, g: Polynomial, domain: Domain, method: str = "analytic") -> complex:
    """``<f, g> = integral over the domain of f*g`` with unit weight.

    ``method`` is ``"analytic"`` (closed-form monomial integrals) or
    ``"quadrature"`` (tensor Gauss-Legendre with (deg f + deg g)//2 + 1 nodes
    per axis); both are exact for polynomials.
    """
    if f.dim != domain.dim or g.dim != domain.dim:
        raise ContractViolation(
            f"Inner product dimension mismatch: f={f.dim}, g={g.dim}, domain={domain.dim}"
        )
    product = f * g
    if method == "analytic":
        return _integrate_analytic(product, domain)
    if method == "quadrature":
        order = (max(f.degree, 0) + max(g.degree, 0)) // 2 + 1
        return _integrate_quadrature(product, domain, order)
    raise ContractViolation(f"Unknown integration method '{method}'")


@dataclass(frozen=True)
class BasisSet:
    """Ordered normalized Legendre functions of total degree <= max_degree on a domain."""

    domain: Domain
    max_degree: int
    indices: Tuple[MultiIndex, ...] = field(init=False)
    functions: Tuple[Polynomial, ...] = field(init=False, repr=False)
    monomial_matrix: Any = field(init=False, repr=False, compare=False)
    _projection_cache: Dict[MultiIndex, Any] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        if self.max_degree < 0:
            raise ContractViolation(f"max_degree must be non-negative, got {self.max_degree}")
        indices = tuple(graded_lex_indices(self.domain.dim, self.max_degree))
        functions = tuple(legendre_poly(index, self.domain) for index in indices)
        # Row i holds L_i on the monomials in ``indices`` (same graded-lex list).
        matrix = np.array([f.coefficient_vector(indices) for f in functions], dtype=complex)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "functions", functions)
        object.__setattr__(self, "monomial_matrix", matrix)
        logger.debug(
            f"Built Legendre basis: dim={self.domain.dim}, max_degree={self.max_degree}, m={len(indices)}"
        )

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def size(self) -> int:
        return len(self.indices)

    @staticmethod
    def expected_size(dim: int, max_degree: int) -> int:
        return comb(dim + max_degree, dim)

    def __len__(self) -> int:
        return len(self.indices)

    def projection_vector(self, index: MultiIndex) -> Any:
        """``v[j] = <x^index, L_j>`` for every basis function, memoized per monomial."""
        cached = self._projection_cache.get(index)
        if cached is None:
            integrals = np.array(
                [
                    self.domain.monomial_integral(tuple(a + b for a, b in zip(index, beta)))
                    for beta in self.indices
                ]
            )
            cached = self.monomial_matrix @ integrals
            self._projection_cache[index] = cached
        return cached

    def evaluate(self, points: Any) -> Any:
        """Basis values L_j(x), shape (n, m) for points of shape (n, d)."""
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        exps = np.array(self.indices, dtype=int)
        monomials = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
        return monomials @ self.monomial_matrix.T

    def reconstruct(self, coeffs: Sequence[complex]) -> Polynomial:
        """``sum_j coeffs[j] * L_j`` collapsed onto monomials."""
        vector = np.asarray(coeffs, dtype=complex) @ self.monomial_matrix
        return Polynomial.from_coefficients(self.dim, self.indices, vector)

    def to_dict(self) -> Dict[str, Any]:
        return {"domain": self.domain.to_dict(), "max_degree": self.max_degree}


def project(f: Polynomial, basis: BasisSet) -> Any:
    """Coefficient vector ``a_l = <f, L_l>`` of length m."""
    if f.dim != basis.dim:
        raise ContractViolation(
            f"Cannot project a {f.dim}-variable polynomial onto a {basis.dim}-variable basis"
        )
    coeffs = np.zeros(basis.size, dtype=complex)
    for index, c in f.terms.items():
        coeffs += c * basis.projection_vector(index)
    return coeffs


def project_many(polys: Sequence[Polynomial], basis: BasisSet) -> Any:
    """Stack of projections, shape (len(polys), m)."""
    if not polys:
        return np.zeros((0, basis.size), dtype=complex)
    return np.vstack([project(p, basis) for p in polys])
