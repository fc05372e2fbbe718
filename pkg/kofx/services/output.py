"""Plot-ready tables and the files behind them."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from kofx.core.exceptions import InputFileError
from kofx.filters.state import Observation
from kofx.moments.propagation import CentralMomentSet
from kofx.reference.statistics import MCReport, SampleMoments
from kofx.services.pipeline import FilterRun

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ["t", "method", "sigma_pos_pred", "sigma_vel_pred", "sigma_pos_eff", "sigma_vel_eff"]


def _axes(prefix: str, count: int) -> List[str]:
    return [f"{prefix}_{k + 1}" for k in range(count)]


def moment_columns(dim: int) -> List[str]:
    return ["t"] + _axes("mean", dim) + _axes("sigma", dim) + _axes("sigma_skew", dim) + _axes("sigma_kurt", dim)


def moments_frame(rows: Sequence[Tuple[float, CentralMomentSet]]) -> pd.DataFrame:
    """One row per epoch; skewness and kurtosis columns are NaN below their order."""
    if not rows:
        return pd.DataFrame(columns=moment_columns(0))
    dim = rows[0][1].dim
    records = []
    for t, moments in rows:
        summary = moments.sigma_summary()
        nan = np.full(dim, np.nan)
        values = [t, *summary["mean"], *summary["sigma"]]
        values += list(summary.get("sigma_skew", nan)) + list(summary.get("sigma_kurt", nan))
        records.append(values)
    return pd.DataFrame(records, columns=moment_columns(dim))


def sample_moments_frame(moments: SampleMoments) -> pd.DataFrame:
    """Sampled counterpart of ``moments_frame`` with the same columns."""
    dim = moments.mean.shape[1]
    return pd.DataFrame(moments.rows(), columns=moment_columns(dim))


def filter_columns(dim: int, channels: int) -> List[str]:
    return ["t"] + _axes("estimate", dim) + _axes("variance", dim) + _axes("innovation", channels)


def filter_frame(run: FilterRun, channels: int) -> pd.DataFrame:
    """Estimate, ``diag(P+)`` and innovation per epoch (NaN innovations without an update)."""
    dim = run.records[0].state.dim
    records = []
    for record in run.records:
        innovation = record.innovation if record.innovation is not None else np.full(channels, np.nan)
        records.append([record.epoch, *record.state.estimate, *np.diag(record.state.covariance), *innovation])
    return pd.DataFrame(records, columns=filter_columns(dim, channels))


def truth_frame(epochs: Sequence[float], truth: Any) -> pd.DataFrame:
    states = np.asarray(truth, dtype=float)
    frame = pd.DataFrame(states, columns=_axes("x", states.shape[1]))
    frame.insert(0, "t", list(epochs))
    return frame


def observations_frame(observations: Sequence[Observation], channels: int) -> pd.DataFrame:
    return pd.DataFrame(
        [[o.t, *o.values] for o in observations], columns=["t"] + _axes("y", channels)
    )


def read_observations(path: Union[str, Path], channels: int) -> List[Observation]:
    """Observations from a CSV with columns ``t, y_1 .. y_q``."""
    columns = ["t"] + _axes("y", channels)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFileError(str(path), str(e)) from e
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InputFileError(str(path), f"missing columns {missing}")
    if frame[columns].isna().to_numpy().any():
        raise InputFileError(str(path), "observation values must not be empty")
    frame = frame[columns].astype(float)
    return [Observation(float(row[0]), row[1:]) for row in frame.to_numpy()]


def comparison_frame(reports: Dict[str, MCReport]) -> pd.DataFrame:
    """Predicted and effective position/velocity spreads per epoch and method."""
    frames = []
    for method, report in reports.items():
        pv = report.position_velocity()
        frame = pd.DataFrame({"t": report.epochs, "method": method, **pv})
        frames.append(frame[COMPARISON_COLUMNS])
    if not frames:
        return pd.DataFrame(columns=COMPARISON_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def write_csv(frame: pd.DataFrame, path: Union[str, Path], float_format: str = "%.17g") -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=float_format)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path
