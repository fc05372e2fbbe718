"""Affine coordinate frames linking physical states to model coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np

from kofx.core.exceptions import ContractViolation
from kofx.poly.polynomial import Polynomial


@dataclass(frozen=True, eq=False)
class AffineFrame:
    """``model = matrix @ physical + offset``; matrix may be complex."""

    matrix: Any
    offset: Any

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        offset = np.array(self.offset, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ContractViolation(f"Frame matrix must be square, got shape {matrix.shape}")
        if offset.shape != (matrix.shape[0],):
            raise ContractViolation(f"Frame offset has shape {offset.shape}")
        if np.linalg.cond(matrix) > 1e12:
            raise ContractViolation("Frame matrix is singular")
        matrix.setflags(write=False)
        offset.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offset", offset)
        inverse = np.linalg.inv(matrix)
        inverse.setflags(write=False)
        object.__setattr__(self, "_inverse", inverse)

    @classmethod
    def identity(cls, dim: int) -> AffineFrame:
        return cls(np.eye(dim), np.zeros(dim))

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def inverse_matrix(self) -> Any:
        return self._inverse  # type: ignore[attr-defined]

    def is_real(self) -> bool:
        return bool(np.all(self.matrix.imag == 0) and np.all(self.offset.imag == 0))

    def to_model(self, physical: Any) -> Any:
        """Map physical states (d,) or (n, d) to model coordinates."""
        x = np.asarray(physical, dtype=complex)
        return x @ self.matrix.T + self.offset

    def from_model(self, model: Any) -> Any:
        v = np.asarray(model, dtype=complex)
        return (v - self.offset) @ self.inverse_matrix.T

    def model_sigma(self, covariance: Any) -> Any:
        """Per-coordinate standard deviation in model coordinates, ``sqrt(diag(J P J^H))``."""
        J = self.matrix
        return np.sqrt(np.abs(np.einsum("ij,jk,ik->i", J, np.asarray(covariance, dtype=float), J.conj())))

    def then(self, other: AffineFrame) -> AffineFrame:
        """Frame applying ``self`` first and ``other`` second."""
        return AffineFrame(other.matrix @ self.matrix, other.matrix @ self.offset + other.offset)

    def physical_observables(self) -> List[Polynomial]:
        """Polynomials in model coordinates returning each physical coordinate."""
        inv = self.inverse_matrix
        shift = inv @ self.offset
        return [Polynomial.linear(inv[k], -shift[k]) for k in range(self.dim)]

    def pull_back(self, poly: Polynomial, center: Sequence[float]) -> Polynomial:
        """``p(J (center + delta) + b)`` as a polynomial in the physical deviation ``delta``."""
        if poly.dim != self.dim:
            raise ContractViolation(f"Polynomial has {poly.dim} variables, frame has {self.dim}")
        anchor = self.matrix @ np.asarray(center, dtype=complex) + self.offset
        return poly.compose_affine(self.matrix, anchor)

    def push_forward(self, poly: Polynomial) -> Polynomial:
        """Re-express a polynomial in physical coordinates as one in model coordinates."""
        inv = self.inverse_matrix
        return poly.compose_affine(inv, -(inv @ self.offset))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "matrix": {"re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()},
            "offset": {"re": self.offset.real.tolist(), "im": self.offset.imag.tolist()},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> AffineFrame:
        matrix = np.array(data["matrix"]["re"]) + 1j * np.array(data["matrix"]["im"])
        offset = np.array(data["offset"]["re"]) + 1j * np.array(data["offset"]["im"])
        return cls(matrix, offset)
