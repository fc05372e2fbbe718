"""Monte Carlo statistics: effective vs. predicted spreads and sampled central moments."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Union

import numpy as np
import pandas as pd

from kofx.core.exceptions import ContractViolation

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
STATISTICS = ("mean_error", "sigma_eff", "sigma_pred", "sigma_skew", "sigma_kurt")


class SpreadStatistics(NamedTuple):
    """Per-epoch, per-axis statistics of a sample stack of shape (runs, epochs, dim)."""

    mean: Any
    sigma: Any
    sigma_skew: Any
    sigma_kurt: Any


def spread_statistics(samples: Any) -> SpreadStatistics:
    """Mean and the ``N - 1`` normalized roots of the 2nd, 3rd and 4th central sums.

    The skewness root keeps its sign. A single run has undefined spreads (NaN).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 3 or x.shape[0] == 0:
        raise ContractViolation(f"Expected samples of shape (runs, epochs, dim), got {x.shape}")
    n = x.shape[0]
    mean = x.mean(axis=0)
    if n < 2:
        logger.warning("A single run leaves the sample spreads undefined; reporting NaN")
        nan = np.full_like(mean, np.nan)
        return SpreadStatistics(mean, nan, nan.copy(), nan.copy())
    dev = x - mean
    sigma = np.sqrt((dev**2).sum(axis=0) / (n - 1))
    skew = np.cbrt((dev**3).sum(axis=0) / (n - 1))
    kurt = ((dev**4).sum(axis=0) / (n - 1)) ** 0.25
    return SpreadStatistics(mean, sigma, skew, kurt)


def _split(dim: int) -> tuple[slice, slice]:
    half = dim // 2
    return slice(0, half), slice(half, dim)


@dataclass(frozen=True, eq=False)
class MCReport:
    """Per-epoch filter statistics over ``runs`` successful Monte Carlo runs.

    Errors are ``estimate - truth``. ``sigma_pred`` is the root of the
    run-averaged filter variance.
    """

    method: str
    epochs: Any
    runs: int
    mean_error: Any
    sigma_eff: Any
    sigma_pred: Any
    sigma_skew: Any
    sigma_kurt: Any
    failures: Dict[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shape = (len(self.epochs), np.asarray(self.mean_error).shape[-1])
        for name in STATISTICS:
            if np.asarray(getattr(self, name)).shape != shape:
                raise ContractViolation(f"MC report field {name} must have shape {shape}")

    @property
    def dim(self) -> int:
        return int(np.asarray(self.mean_error).shape[1])

    @classmethod
    def from_samples(
        cls,
        method: str,
        epochs: Any,
        errors: Any,
        variances: Any,
        failures: Union[Dict[int, str], None] = None,
    ) -> MCReport:
        """Reduce stacked errors and filter variances of shape (runs, epochs, dim)."""
        stats = spread_statistics(errors)
        sigma_pred = np.sqrt(np.mean(np.asarray(variances, dtype=float), axis=0))
        return cls(
            method=method,
            epochs=np.asarray(epochs, dtype=float),
            runs=int(np.asarray(errors).shape[0]),
            mean_error=stats.mean,
            sigma_eff=stats.sigma,
            sigma_pred=sigma_pred,
            sigma_skew=stats.sigma_skew,
            sigma_kurt=stats.sigma_kurt,
            failures=dict(failures or {}),
        )

    def position_velocity(self) -> Dict[str, Any]:
        """Root-sum-square spreads of the position half and the velocity half of the state."""
        pos, vel = _split(self.dim)
        return {
            "sigma_pos_pred": np.sqrt(np.sum(self.sigma_pred[:, pos] ** 2, axis=1)),
            "sigma_vel_pred": np.sqrt(np.sum(self.sigma_pred[:, vel] ** 2, axis=1)),
            "sigma_pos_eff": np.sqrt(np.sum(self.sigma_eff[:, pos] ** 2, axis=1)),
            "sigma_vel_eff": np.sqrt(np.sum(self.sigma_eff[:, vel] ** 2, axis=1)),
        }

    def consistency_ratio(self) -> Any:
        """``sigma_eff / sigma_pred`` per epoch and axis."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.sigma_eff / self.sigma_pred

    def to_frame(self) -> pd.DataFrame:
        """One row per epoch per statistic."""
        columns = [f"x{k + 1}" for k in range(self.dim)]
        frames = []
        for name in STATISTICS:
            frame = pd.DataFrame(np.asarray(getattr(self, name)), columns=columns)
            frame.insert(0, "statistic", name)
            frame.insert(0, "t", self.epochs)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def summary(self) -> Dict[str, Any]:
        last = -1
        pv = self.position_velocity()
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "method": self.method,
            "runs": self.runs,
            "failures": {str(k): v for k, v in sorted(self.failures.items())},
            "epochs": len(self.epochs),
            "final_epoch": float(self.epochs[last]),
            "final": {
                "mean_error": self.mean_error[last].tolist(),
                "sigma_eff": self.sigma_eff[last].tolist(),
                "sigma_pred": self.sigma_pred[last].tolist(),
                **{k: float(v[last]) for k, v in pv.items()},
            },
        }

    def write_csv(self, path: Union[str, Path], float_format: str = "%.17g") -> Path:
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format=float_format)
        return path

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return path


@dataclass(frozen=True, eq=False)
class SampleMoments:
    """Sampled central-moment summaries of propagated truth states."""

    epochs: Any
    samples: int
    mean: Any
    sigma: Any
    sigma_skew: Any
    sigma_kurt: Any

    @classmethod
    def from_states(cls, epochs: Any, states: Any) -> SampleMoments:
        stats = spread_statistics(states)
        return cls(
            np.asarray(epochs, dtype=float),
            int(np.asarray(states).shape[0]),
            stats.mean,
            stats.sigma,
            stats.sigma_skew,
            stats.sigma_kurt,
        )

    def rows(self) -> List[Dict[str, float]]:
        out = []
        for k, t in enumerate(self.epochs):
            row: Dict[str, float] = {"t": float(t)}
            for name in ("mean", "sigma", "sigma_skew", "sigma_kurt"):
                for j, v in enumerate(getattr(self, name)[k]):
                    row[f"{name}_{j + 1}"] = float(v)
            out.append(row)
        return out
