"""Sparse multivariate polynomials with complex coefficients."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from types import MappingProxyType
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from kofx.core.exceptions import ContractViolation

MultiIndex = Tuple[int, ...]
Terms = Dict[MultiIndex, complex]
Scalar = Union[int, float, complex]

CLEANUP_THRESHOLD = 1e-14
MAX_CLEANUP_THRESHOLD = 1e-6

_cleanup_threshold = CLEANUP_THRESHOLD


def cleanup_threshold() -> float:
    """Relative threshold below which coefficients are dropped."""
    return _cleanup_threshold


def set_cleanup_threshold(value: float) -> None:
    """Set the process-wide relative cleanup threshold; must lie in (0, 1e-6)."""
    global _cleanup_threshold
    if not 0.0 < value < MAX_CLEANUP_THRESHOLD:
        raise ContractViolation(
            f"Cleanup threshold must lie in (0, {MAX_CLEANUP_THRESHOLD:.0e}), got {value}"
        )
    _cleanup_threshold = float(value)


def total_degree(index: MultiIndex) -> int:
    """Total degree of a multi-index."""
    return sum(index)


def validate_index(index: Sequence[int], dim: int) -> MultiIndex:
    """Return the index as a tuple after checking its length and signs."""
    exps = tuple(int(e) for e in index)
    if len(exps) != dim:
        raise ContractViolation(
            f"Multi-index {exps} has length {len(exps)}, expected {dim}",
            details={"index": list(exps), "dim": dim},
        )
    if any(e < 0 for e in exps):
        raise ContractViolation(f"Multi-index {exps} has negative entries")
    return exps


def _compositions(degree: int, parts: int) -> Iterator[MultiIndex]:
    if parts == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in _compositions(degree - first, parts - 1):
            yield (first, *rest)


def graded_lex_indices(dim: int, max_degree: int) -> List[MultiIndex]:
    """All multi-indices of total degree <= max_degree in graded lexicographic order.

    Within one total degree, indices are sorted lexicographically with the first
    variable most significant, e.g. for two variables: 1, x, y, x^2, xy, y^2.
    """
    if dim < 1 or max_degree < 0:
        raise ContractViolation(f"Invalid basis size dim={dim}, max_degree={max_degree}")
    indices: List[MultiIndex] = []
    for degree in range(max_degree + 1):
        indices.extend(_compositions(degree, dim))
    return indices


def _cleanup(terms: Terms, threshold: float) -> Terms:
    if not terms:
        return {}
    largest = max(abs(c) for c in terms.values())
    if largest == 0.0:
        return {}
    floor = threshold * largest
    return {k: c for k, c in terms.items() if c != 0 and abs(c) >= floor}


def _mul_terms(a: Mapping[MultiIndex, complex], b: Mapping[MultiIndex, complex], max_degree: Union[int, None] = None) -> Terms:
    out: Terms = {}
    for ea, ca in a.items():
        da = sum(ea)
        for eb, cb in b.items():
            if max_degree is not None and da + sum(eb) > max_degree:
                continue
            key = tuple(x + y for x, y in zip(ea, eb))
            out[key] = out.get(key, 0j) + ca * cb
    return out


class Polynomial:
    """Sparse polynomial in ``dim`` variables.

    Terms map exponent tuples to complex coefficients. Instances are immutable;
    every operation returns a new polynomial and drops coefficients below
    ``cleanup_threshold()`` times the largest one.
    """

    __slots__ = ("_dim", "_terms")

    def __init__(
        self,
        dim: int,
        terms: Union[Mapping[Sequence[int], Scalar], None] = None,
        *,
        threshold: Union[float, None] = None,
    ) -> None:
        if dim < 1:
            raise ContractViolation(f"Polynomial dimension must be positive, got {dim}")
        raw: Terms = {}
        for index, coeff in (terms or {}).items():
            key = validate_index(index, dim)
            raw[key] = raw.get(key, 0j) + complex(coeff)
        self._dim = dim
        self._terms = _cleanup(raw, _cleanup_threshold if threshold is None else threshold)

    # Construction helpers

    @classmethod
    def zero(cls, dim: int) -> Polynomial:
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: Scalar) -> Polynomial:
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, axis: int, coeff: Scalar = 1.0) -> Polynomial:
        """The polynomial ``coeff * x_axis``."""
        if not 0 <= axis < dim:
            raise ContractViolation(f"Axis {axis} out of range for dimension {dim}")
        exps = [0] * dim
        exps[axis] = 1
        return cls(dim, {tuple(exps): coeff})

    @classmethod
    def linear(cls, coeffs: Sequence[Scalar], offset: Scalar = 0.0) -> Polynomial:
        """The affine form ``offset + sum_j coeffs[j] x_j``."""
        dim = len(coeffs)
        terms: Dict[MultiIndex, Scalar] = {(0,) * dim: offset}
        for j, c in enumerate(coeffs):
            exps = [0] * dim
            exps[j] = 1
            terms[tuple(exps)] = c
        return cls(dim, terms)

    @classmethod
    def from_coefficients(
        cls, dim: int, indices: Sequence[MultiIndex], values: Iterable[Scalar]
    ) -> Polynomial:
        """Build from parallel sequences of multi-indices and coefficients."""
        terms: Dict[MultiIndex, Scalar] = {}
        for index, value in zip(indices, values):
            if value != 0:
                terms[index] = terms.get(index, 0) + value
        return cls(dim, terms)

    @classmethod
    def _from_raw(cls, dim: int, terms: Terms) -> Polynomial:
        poly = cls.__new__(cls)
        poly._dim = dim
        poly._terms = _cleanup(terms, _cleanup_threshold)
        return poly

    # Properties

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def terms(self) -> Mapping[MultiIndex, complex]:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(k) for k in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, index: Sequence[int]) -> complex:
        return self._terms.get(tuple(index), 0j)

    def constant_term(self) -> complex:
        return self._terms.get((0,) * self._dim, 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        if not self._terms:
            return f"Polynomial(dim={self._dim}, 0)"
        parts = [f"{c:.6g}*{k}" for k, c in sorted(self._terms.items())]
        return f"Polynomial(dim={self._dim}, {' + '.join(parts)})"

    # Arithmetic

    def _check_dim(self, other: Polynomial) -> None:
        if other.dim != self._dim:
            raise ContractViolation(
                f"Polynomial dimension mismatch: {self._dim} vs {other.dim}",
                details={"left": self._dim, "right": other.dim},
            )

    def _coerce(self, other: Union[Polynomial, Scalar]) -> Polynomial:
        if isinstance(other, Polynomial):
            self._check_dim(other)
            return other
        return Polynomial.constant(self._dim, other)

    def __add__(self, other: Union[Polynomial, Scalar]) -> Polynomial:
        rhs = self._coerce(other)
        out = dict(self._terms)
        for k, c in rhs._terms.items():
            out[k] = out.get(k, 0j) + c
        return Polynomial._from_raw(self._dim, out)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial._from_raw(self._dim, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: Union[Polynomial, Scalar]) -> Polynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other: Scalar) -> Polynomial:
        return (-self) + other

    def __mul__(self, other: Union[Polynomial, Scalar]) -> Polynomial:
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check_dim(other)
        return Polynomial._from_raw(self._dim, _mul_terms(self._terms, other._terms))

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> Polynomial:
        if exponent < 0:
            raise ContractViolation("Negative polynomial powers are not polynomials")
        result = Polynomial.constant(self._dim, 1.0)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def scale(self, factor: Scalar) -> Polynomial:
        factor = complex(factor)
        return Polynomial._from_raw(self._dim, {k: c * factor for k, c in self._terms.items()})

    def multiply(self, other: Polynomial, max_degree: Union[int, None] = None) -> Polynomial:
        """Product, optionally truncated to ``max_degree``."""
        self._check_dim(other)
        return Polynomial._from_raw(self._dim, _mul_terms(self._terms, other._terms, max_degree))

    def differentiate(self, axis: int) -> Polynomial:
        """Partial derivative with respect to ``x_axis``."""
        if not 0 <= axis < self._dim:
            raise ContractViolation(f"Axis {axis} out of range for dimension {self._dim}")
        out: Terms = {}
        for k, c in self._terms.items():
            e = k[axis]
            if e == 0:
                continue
            key = k[:axis] + (e - 1,) + k[axis + 1 :]
            out[key] = out.get(key, 0j) + c * e
        return Polynomial._from_raw(self._dim, out)

    def gradient(self) -> List[Polynomial]:
        return [self.differentiate(axis) for axis in range(self._dim)]

    def truncate(self, max_degree: int) -> Polynomial:
        """Drop every term of total degree above ``max_degree``."""
        return Polynomial._from_raw(
            self._dim, {k: c for k, c in self._terms.items() if sum(k) <= max_degree}
        )

    def homogeneous_part(self, degree: int) -> Polynomial:
        return Polynomial._from_raw(
            self._dim, {k: c for k, c in self._terms.items() if sum(k) == degree}
        )

    def embed(self, dim: int, axes: Sequence[int]) -> Polynomial:
        """Re-express in ``dim`` variables, variable i going to ``axes[i]``."""
        if len(axes) != self._dim:
            raise ContractViolation(f"Need {self._dim} target axes, got {len(axes)}")
        out: Terms = {}
        for k, c in self._terms.items():
            exps = [0] * dim
            for src, dst in enumerate(axes):
                exps[dst] += k[src]
            out[tuple(exps)] = out.get(tuple(exps), 0j) + c
        return Polynomial._from_raw(dim, out)

    def compose_affine(self, matrix: Any, offset: Any = None) -> Polynomial:
        """Substitute ``x = matrix @ y + offset`` and return the polynomial in ``y``.

        ``matrix`` has shape (self.dim, new_dim).
        """
        mat = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if mat.shape[0] != self._dim:
            raise ContractViolation(
                f"Substitution matrix has {mat.shape[0]} rows, expected {self._dim}"
            )
        new_dim = mat.shape[1]
        off = np.zeros(self._dim, dtype=complex) if offset is None else np.asarray(offset, dtype=complex)
        if off.shape != (self._dim,):
            raise ContractViolation(f"Offset has shape {off.shape}, expected ({self._dim},)")

        linear: List[Terms] = []
        for k in range(self._dim):
            terms: Terms = {}
            if off[k] != 0:
                terms[(0,) * new_dim] = complex(off[k])
            for j in range(new_dim):
                if mat[k, j] != 0:
                    exps = [0] * new_dim
                    exps[j] = 1
                    terms[tuple(exps)] = complex(mat[k, j])
            linear.append(terms)

        powers: Dict[Tuple[int, int], Terms] = {}

        def power(axis: int, e: int) -> Terms:
            if e == 0:
                return {(0,) * new_dim: 1.0 + 0j}
            if (axis, e) not in powers:
                powers[(axis, e)] = (
                    linear[axis] if e == 1 else _mul_terms(power(axis, e - 1), linear[axis])
                )
            return powers[(axis, e)]

        out: Terms = {}
        for k, c in self._terms.items():
            acc: Terms = {(0,) * new_dim: c}
            for axis, e in enumerate(k):
                if e:
                    acc = _mul_terms(acc, power(axis, e))
            for key, v in acc.items():
                out[key] = out.get(key, 0j) + v
        return Polynomial._from_raw(new_dim, out)

    def shift(self, center: Sequence[Scalar]) -> Polynomial:
        """``f~(delta) = f(center + delta)``."""
        center_arr = np.asarray(center, dtype=complex)
        if center_arr.shape != (self._dim,):
            raise ContractViolation(
                f"Center has shape {center_arr.shape}, expected ({self._dim},)"
            )
        return self.compose_affine(np.eye(self._dim), center_arr)

    # Evaluation and conversion

    def evaluate(self, points: Any) -> Any:
        """Evaluate at one point (shape (dim,)) or many (shape (n, dim))."""
        pts = np.asarray(points, dtype=complex)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self._dim:
            raise ContractViolation(
                f"Evaluation points have {pts.shape[1]} coordinates, expected {self._dim}"
            )
        if not self._terms:
            values = np.zeros(pts.shape[0], dtype=complex)
        else:
            exps = np.array(list(self._terms.keys()), dtype=int)
            coeffs = np.array(list(self._terms.values()), dtype=complex)
            monomials = np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)
            values = monomials @ coeffs
        return values[0] if single else values

    def __call__(self, points: Any) -> Any:
        return self.evaluate(points)

    def coefficient_vector(self, indices: Sequence[MultiIndex]) -> Any:
        """Coefficients on ``indices``; terms outside the list are ignored."""
        return np.array([self._terms.get(k, 0j) for k in indices], dtype=complex)

    def imag_residual(self) -> float:
        """Largest |imaginary part| relative to the largest |coefficient|."""
        if not self._terms:
            return 0.0
        largest = max(abs(c) for c in self._terms.values())
        return max(abs(c.imag) for c in self._terms.values()) / largest

    def real_part(self) -> Polynomial:
        return Polynomial._from_raw(self._dim, {k: complex(c.real) for k, c in self._terms.items()})

    def allclose(self, other: Polynomial, atol: float = 1e-12) -> bool:
        """Coefficient-wise comparison."""
        self._check_dim(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    def to_dict(self) -> Dict[str, Any]:
        """JSON form ``{"dim": d, "terms": [{"exp": [...], "re": r, "im": i}, ...]}``."""
        return {
            "dim": self._dim,
            "terms": [
                {"exp": list(k), "re": c.real, "im": c.imag}
                for k, c in sorted(self._terms.items(), key=lambda kv: (sum(kv[0]), [-e for e in kv[0]]))
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Polynomial:
        try:
            dim = int(data["dim"])
            terms = {tuple(t["exp"]): complex(t["re"], t.get("im", 0.0)) for t in data["terms"]}
        except (KeyError, TypeError, ValueError) as e:
            raise ContractViolation(f"Malformed polynomial document: {e}") from e
        return cls(dim, terms)


def add(f: Polynomial, g: Polynomial) -> Polynomial:
    return f + g


def multiply(f: Polynomial, g: Polynomial) -> Polynomial:
    return f * g


def scale(f: Polynomial, factor: Scalar) -> Polynomial:
    return f.scale(factor)


def differentiate(f: Polynomial, axis: int) -> Polynomial:
    return f.differentiate(axis)


def shift_center(f: Polynomial, center: Sequence[Scalar]) -> Polynomial:
    """Recenter ``f`` so that ``shift_center(f, c)(delta) == f(c + delta)``."""
    return f.shift(center)
