"""Filter state, observation and per-epoch record types."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Tuple, Union

import numpy as np

from kofx.moments.isserlis import check_covariance


def symmetrize(covariance: Any) -> Any:
    cov = np.asarray(covariance, dtype=float)
    return 0.5 * (cov + cov.T)


def floor_covariance(covariance: Any) -> Tuple[Any, float]:
    """Symmetrize and, if needed, rebuild with negative eigenvalues clipped to zero.

    Returns the covariance and the most negative eigenvalue seen.
    """
    cov = symmetrize(covariance)
    values, vectors = np.linalg.eigh(cov)
    if values[0] >= 0:
        return cov, float(values[0])
    clipped = np.clip(values, 0.0, None)
    return symmetrize((vectors * clipped) @ vectors.T), float(values[0])


@dataclass(frozen=True, eq=False)
class FilterState:
    """Posterior mean and covariance at an epoch."""

    epoch: float
    estimate: Any
    covariance: Any

    def __post_init__(self) -> None:
        estimate = np.asarray(self.estimate, dtype=float).ravel()
        object.__setattr__(self, "estimate", estimate)
        object.__setattr__(self, "covariance", check_covariance(self.covariance, estimate.size))

    @property
    def dim(self) -> int:
        return int(self.estimate.size)

    @property
    def sigma(self) -> Any:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


@dataclass(frozen=True, eq=False)
class Observation:
    """Measurement vector taken at epoch ``t``."""

    t: float
    values: Any

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).ravel())


@dataclass(frozen=True, eq=False)
class FilterRecord:
    """Filter output at one epoch; ``innovation`` is None for prediction-only epochs."""

    state: FilterState
    innovation: Union[Any, None] = None
    innovation_covariance: Union[Any, None] = None

    @property
    def epoch(self) -> float:
        return self.state.epoch

    @property
    def updated(self) -> bool:
        return self.innovation is not None

    def normalized_innovation(self) -> Union[Any, None]:
        """Innovation whitened by the Cholesky factor of its covariance."""
        if self.innovation is None or self.innovation_covariance is None:
            return None
        factor = np.linalg.cholesky(self.innovation_covariance)
        return np.linalg.solve(factor, self.innovation)
