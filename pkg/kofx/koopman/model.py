"""Galerkin Koopman matrix, its left eigendecomposition and the model container."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, NamedTuple, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from kofx.core.exceptions import ContractViolation, NonDiagonalizableError
from kofx.koopman.frame import AffineFrame
from kofx.poly.basis import BasisSet, Domain, project
from kofx.poly.polynomial import Polynomial

logger = logging.getLogger(__name__)

EIGVEC_COND_LIMIT = 1e12
INVERSE_COND_LIMIT = 1e10
RESIDUAL_TOLERANCE = 1e-8
ORDER_DECIMALS = 9


@dataclass(frozen=True, eq=False)
class VectorField:
    """Polynomial right-hand side ``dx/dt = f(x)`` on a domain."""

    components: Tuple[Polynomial, ...]
    domain: Domain

    def __post_init__(self) -> None:
        components = tuple(self.components)
        if len(components) != self.domain.dim:
            raise ContractViolation(
                f"Vector field has {len(components)} components on a {self.domain.dim}-d domain"
            )
        for k, comp in enumerate(components):
            if comp.dim != self.domain.dim:
                raise ContractViolation(
                    f"Component {k} has {comp.dim} variables, expected {self.domain.dim}"
                )
        object.__setattr__(self, "components", components)

    @classmethod
    def linear(cls, matrix: Any, domain: Domain) -> VectorField:
        """``f(x) = M x``."""
        mat = np.asarray(matrix)
        return cls(tuple(Polynomial.linear(row) for row in mat), domain)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    def evaluate(self, points: Any) -> Any:
        """Field values, shape (d,) for one point or (n, d) for many."""
        values = [c.evaluate(points) for c in self.components]
        return np.stack(values, axis=-1)

    def linear_part(self) -> Any:
        """Jacobian at the origin."""
        units = [tuple(int(j == k) for k in range(self.dim)) for j in range(self.dim)]
        return np.array([[c.coefficient(u) for u in units] for c in self.components])

    def truncated(self, basis: BasisSet) -> VectorField:
        """Components above the basis degree replaced by their basis projection."""
        if self.degree <= basis.max_degree:
            return self
        logger.debug(
            f"Projecting degree-{self.degree} vector field onto degree-{basis.max_degree} basis"
        )
        return VectorField(
            tuple(
                c if c.degree <= basis.max_degree else basis.reconstruct(project(c, basis))
                for c in self.components
            ),
            self.domain,
        )


def build_koopman_matrix(vector_field: VectorField, basis: BasisSet) -> Any:
    """``K[i, j] = <grad L_i . f, L_j>`` so that ``dL/dt = K L`` on the basis."""
    if vector_field.dim != basis.dim:
        raise ContractViolation(
            f"Vector field dimension {vector_field.dim} does not match basis dimension {basis.dim}"
        )
    f = vector_field.truncated(basis)
    matrix = np.zeros((basis.size, basis.size), dtype=complex)
    for i, func in enumerate(basis.functions):
        lie = Polynomial.zero(basis.dim)
        for axis, comp in enumerate(f.components):
            partial = func.differentiate(axis)
            if partial.is_zero() or comp.is_zero():
                continue
            lie = lie + partial * comp
        matrix[i] = project(lie, basis)
    return matrix


class SpectralDecomposition(NamedTuple):
    """Left eigenvectors (rows), eigenvalues and the inverse when it was formed."""

    eigenvectors: Any
    eigenvalues: Any
    inverse: Union[Any, None]
    condition_number: float


def _ordering(eigenvalues: Any, scale: float) -> Any:
    re = np.round(eigenvalues.real / scale, ORDER_DECIMALS)
    im = np.round(eigenvalues.imag / scale, ORDER_DECIMALS)
    # lexsort uses the last key as primary
    return np.lexsort((-im, -np.abs(im), -re))


def _normalize_rows(vectors: Any) -> Any:
    out = np.empty_like(vectors)
    for k, row in enumerate(vectors):
        row = row / np.linalg.norm(row)
        pivot = row[int(np.argmax(np.abs(row)))]
        out[k] = row * (np.conj(pivot) / abs(pivot))
    return out


def eigendecompose(
    matrix: Any,
    cond_limit: float = EIGVEC_COND_LIMIT,
    inverse_limit: float = INVERSE_COND_LIMIT,
) -> SpectralDecomposition:
    """Left eigendecomposition ``C K = diag(eigenvalues) C`` in deterministic order.

    Eigenvalues are sorted by real part descending, then |imag| descending, then
    imag descending, so conjugate pairs sit next to each other. Each row of C has
    unit 2-norm with its largest entry real and positive.
    """
    K = np.asarray(matrix, dtype=complex)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ContractViolation(f"Koopman matrix must be square, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ContractViolation("Koopman matrix has non-finite entries")

    try:
        eigenvalues, vl = scipy.linalg.eig(K, left=True, right=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NonDiagonalizableError(float("inf")) from e

    # scipy returns vl with vl[:, i]^H K = w_i vl[:, i]^H
    left = vl.conj().T
    order = _ordering(eigenvalues, max(float(np.linalg.norm(K, np.inf)), 1.0))
    eigenvalues = eigenvalues[order]
    left = _normalize_rows(left[order])

    condition = float(np.linalg.cond(left))
    logger.debug(f"Eigenvector matrix condition number {condition:.3e}")
    if not np.isfinite(condition) or condition > cond_limit:
        raise NonDiagonalizableError(condition)

    inverse = None
    if condition <= inverse_limit:
        inverse = np.linalg.inv(left)
    else:
        logger.warning(
            f"Eigenvector matrix condition {condition:.3e} exceeds {inverse_limit:.1e}; "
            f"using linear solves instead of an explicit inverse"
        )
    return SpectralDecomposition(left, eigenvalues, inverse, condition)


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    """Finite Koopman representation built in the coordinates of ``frame``."""

    basis: BasisSet
    koopman_matrix: Any
    eigenvectors: Any
    eigenvalues: Any
    inverse: Union[Any, None]
    frame: AffineFrame
    condition_number: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def size(self) -> int:
        return self.basis.size

    def residual(self) -> float:
        """``||C K - diag(eigenvalues) C||_inf / ||K||_inf`` (0 for a zero matrix)."""
        K = self.koopman_matrix
        norm = float(np.linalg.norm(K, np.inf))
        if norm == 0.0:
            return 0.0
        diff = self.eigenvectors @ K - self.eigenvalues[:, None] * self.eigenvectors
        return float(np.linalg.norm(diff, np.inf)) / norm

    def inverse_residual(self) -> float:
        """``||C C^-1 - I||_inf``; zero when no explicit inverse was formed."""
        if self.inverse is None:
            return 0.0
        eye = np.eye(self.size)
        return float(np.linalg.norm(self.eigenvectors @ self.inverse - eye, np.inf))

    def right_solve(self, coefficients: Any) -> Any:
        """``A C^-1`` for a coefficient matrix A of shape (q, m)."""
        A = np.atleast_2d(np.asarray(coefficients, dtype=complex))
        if self.inverse is not None:
            return A @ self.inverse
        return np.linalg.solve(self.eigenvectors.T, A.T).T

    def diagnostics(self) -> Dict[str, Any]:
        eig = self.eigenvalues
        return {
            "dim": self.dim,
            "max_degree": self.basis.max_degree,
            "basis_size": self.size,
            "condition_number": self.condition_number,
            "explicit_inverse": self.inverse is not None,
            "residual": self.residual(),
            "inverse_residual": self.inverse_residual(),
            "max_real_eigenvalue": float(np.max(eig.real)) if eig.size else 0.0,
            "max_abs_eigenvalue": float(np.max(np.abs(eig))) if eig.size else 0.0,
        }


def build_model(
    vector_field: VectorField,
    max_degree: int,
    frame: Union[AffineFrame, None] = None,
    cond_limit: float = EIGVEC_COND_LIMIT,
    inverse_limit: float = INVERSE_COND_LIMIT,
    metadata: Union[Dict[str, Any], None] = None,
) -> KoopmanModel:
    """Assemble K on the field's domain and decompose it."""
    basis = BasisSet(vector_field.domain, max_degree)
    logger.info(f"Assembling Koopman matrix: dim={basis.dim}, max_degree={max_degree}, m={basis.size}")
    K = build_koopman_matrix(vector_field, basis)
    spectral = eigendecompose(K, cond_limit=cond_limit, inverse_limit=inverse_limit)
    model = KoopmanModel(
        basis=basis,
        koopman_matrix=K,
        eigenvectors=spectral.eigenvectors,
        eigenvalues=spectral.eigenvalues,
        inverse=spectral.inverse,
        frame=frame or AffineFrame.identity(basis.dim),
        condition_number=spectral.condition_number,
        metadata=dict(metadata or {}),
    )
    residual = model.residual()
    if residual > RESIDUAL_TOLERANCE:
        logger.warning(f"Eigendecomposition residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE:.0e}")
    return model


@dataclass(frozen=True, eq=False)
class ObservableSet:
    """Observables ``g`` with their basis coefficients ``A`` (``g = A L``)."""

    observables: Tuple[Polynomial, ...]
    coefficients: Any

    @classmethod
    def from_polynomials(cls, polys: Sequence[Polynomial], basis: BasisSet) -> ObservableSet:
        polys = tuple(polys)
        if not polys:
            raise ContractViolation("An observable set needs at least one observable")
        if any(p.degree > basis.max_degree for p in polys):
            logger.warning(
                f"Observable degree above basis degree {basis.max_degree}; coefficients are a projection"
            )
        rows = np.vstack([project(p, basis) for p in polys])
        return cls(polys, rows)

    @property
    def count(self) -> int:
        return len(self.observables)

    def __len__(self) -> int:
        return len(self.observables)


def identity_observables(model: KoopmanModel) -> ObservableSet:
    """Observables returning the physical coordinates ``J^-1 (v - b)``."""
    return ObservableSet.from_polynomials(model.frame.physical_observables(), model.basis)


def koopman_modes(model: KoopmanModel, observables: ObservableSet) -> Any:
    """``B = A C^-1``: observables expressed on the eigenfunctions."""
    return model.right_solve(observables.coefficients)
