"""Measurement models with exact evaluation and truncated Taylor expansions."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Any, List, Sequence, Union

import numpy as np

from kofx.core.exceptions import ContractViolation
from kofx.poly import series
from kofx.poly.polynomial import Polynomial

logger = logging.getLogger(__name__)

ARCSEC = np.pi / (180.0 * 3600.0)


class MeasurementModel(ABC):
    """``y = h(x) + eta`` with ``eta ~ N(0, noise)``."""

    def __init__(self, noise: Any, state_dim: int, taylor_order: int = 2) -> None:
        R = np.atleast_2d(np.asarray(noise, dtype=float))
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ContractViolation(f"Noise covariance must be square, got shape {R.shape}")
        if np.max(np.abs(R - R.T)) > 1e-12 * max(1.0, float(np.max(np.abs(R)))):
            raise ContractViolation("Noise covariance is not symmetric")
        if np.min(np.linalg.eigvalsh(R)) <= 0:
            raise ContractViolation("Noise covariance must be positive definite")
        if taylor_order < 1:
            raise ContractViolation(f"Taylor order must be at least 1, got {taylor_order}")
        self.noise = R
        self.state_dim = state_dim
        self.taylor_order = taylor_order

    @property
    def dim(self) -> int:
        return int(self.noise.shape[0])

    @abstractmethod
    def evaluate(self, state: Any) -> Any:
        """Exact ``h(state)``."""

    @abstractmethod
    def expand(self, center: Sequence[float], order: Union[int, None] = None) -> List[Polynomial]:
        """``h(center + delta)`` truncated at ``order`` as polynomials in ``delta``."""

    def jacobian(self, state: Any) -> Any:
        """``dh/dx`` read off the first-order expansion."""
        units = [tuple(int(j == k) for k in range(self.state_dim)) for j in range(self.state_dim)]
        return np.array(
            [[p.coefficient(u).real for u in units] for p in self.expand(state, order=1)]
        )

    def sample_noise(self, rng: np.random.Generator) -> Any:
        return rng.multivariate_normal(np.zeros(self.dim), self.noise, method="cholesky")


class LinearMeasurement(MeasurementModel):
    """``h(x) = H x``."""

    def __init__(self, matrix: Any, noise: Any, taylor_order: int = 2) -> None:
        H = np.atleast_2d(np.asarray(matrix, dtype=float))
        super().__init__(noise, H.shape[1], taylor_order)
        if H.shape[0] != self.dim:
            raise ContractViolation(
                f"Measurement matrix has {H.shape[0]} rows, noise is {self.dim}x{self.dim}"
            )
        self.matrix = H

    def evaluate(self, state: Any) -> Any:
        return self.matrix @ np.asarray(state, dtype=float)

    def expand(self, center: Sequence[float], order: Union[int, None] = None) -> List[Polynomial]:
        c = np.asarray(center, dtype=float)
        return [Polynomial.linear(row, float(row @ c)) for row in self.matrix]

    def jacobian(self, state: Any) -> Any:
        return self.matrix.copy()


class AzimuthElevation(MeasurementModel):
    """Azimuth and elevation of the state seen from the secondary at ``(1 - mu, 0, 0)``.

    ``az = arctan(y / (x - 1 + mu))``, ``el = arcsin(z / |r - r_2|)``.
    """

    def __init__(
        self,
        mu: float,
        noise: Union[Any, None] = None,
        sigma_arcsec: float = 10.0,
        taylor_order: int = 2,
    ) -> None:
        if noise is None:
            noise = (sigma_arcsec * ARCSEC) ** 2 * np.eye(2)
        super().__init__(noise, 6, taylor_order)
        if self.dim != 2:
            raise ContractViolation("Azimuth/elevation noise must be 2x2")
        self.mu = mu

    def evaluate(self, state: Any) -> Any:
        s = np.asarray(state, dtype=float)
        dx = s[0] - 1.0 + self.mu
        return np.array([np.arctan(s[1] / dx), np.arcsin(s[2] / np.sqrt(dx * dx + s[1] ** 2 + s[2] ** 2))])

    def expand(self, center: Sequence[float], order: Union[int, None] = None) -> List[Polynomial]:
        order = order or self.taylor_order
        c = np.asarray(center, dtype=float)
        dx = Polynomial.variable(6, 0) + (c[0] - 1.0 + self.mu)
        y = Polynomial.variable(6, 1) + c[1]
        z = Polynomial.variable(6, 2) + c[2]
        azimuth = series.arctan(y.multiply(series.reciprocal(dx, order), max_degree=order), order)
        distance = series.sqrt(dx * dx + y * y + z * z, order)
        elevation = series.arcsin(z.multiply(series.reciprocal(distance, order), max_degree=order), order)
        return [azimuth.real_part(), elevation.real_part()]
