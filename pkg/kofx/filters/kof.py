"""Koopman operator filter: polynomial prediction and Kalman-structured update."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, List, NamedTuple, Sequence, Union

import numpy as np

from kofx.core.exceptions import (
    ContractViolation,
    FilterStepError,
    KofxError,
    SingularInnovationError,
    UnsupportedOrderError,
)
from kofx.filters.measurement import MeasurementModel
from kofx.filters.state import FilterRecord, FilterState, Observation, floor_covariance
from kofx.koopman.flow import physical_flow
from kofx.koopman.model import KoopmanModel, ObservableSet
from kofx.moments.propagation import GaussianBelief, MomentEngine, propagate_moments
from kofx.poly.polynomial import Polynomial

logger = logging.getLogger(__name__)

SINGULAR_CONDITION = 1e14
CADENCE_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class FilterConfig:
    """Model and tuning of one KOF run.

    With a ``cadence`` every observation must fall on ``t0 + k * cadence``, k >= 1.
    """

    model: KoopmanModel
    psi: int = 2
    cadence: Union[float, None] = None
    recenter: bool = True
    order_cap: int = 16
    eig_floor: float = 1e-10

    def __post_init__(self) -> None:
        if self.psi not in (2, 3, 4):
            raise UnsupportedOrderError(self.psi)
        if self.cadence is not None and not self.cadence > 0:
            raise ContractViolation(f"Measurement cadence must be positive, got {self.cadence}")

    @property
    def max_degree(self) -> int:
        return self.model.basis.max_degree


class Prediction(NamedTuple):
    """Predicted moments and the flow polynomials in the deviation at the prior epoch."""

    epoch: float
    mean: Any
    covariance: Any
    flow: List[Polynomial]
    prior: FilterState


def _anchored_flow(
    model: KoopmanModel,
    dt: float,
    estimate: Any,
    anchor: Union[Sequence[float], None],
    observables: Union[ObservableSet, None] = None,
) -> List[Polynomial]:
    if anchor is None:
        return physical_flow(model, dt, estimate, observables=observables)
    anchor = np.asarray(anchor, dtype=float)
    offset = np.asarray(estimate, dtype=float) - anchor
    flow = physical_flow(model, dt, anchor, observables=observables)
    if not np.any(offset):
        return flow
    return [p.shift(offset) for p in flow]


def predict(
    state: FilterState,
    model: KoopmanModel,
    dt: float,
    psi: int = 2,
    cap: int = 16,
    anchor: Union[Sequence[float], None] = None,
) -> Prediction:
    """Propagate the Gaussian prior through the shifted Koopman flow.

    The flow is expanded around ``anchor`` (default: the estimate) and then
    re-expressed in the deviation from the estimate.
    """
    flow = _anchored_flow(model, dt, state.estimate, anchor)
    moments = propagate_moments(flow, GaussianBelief(state.estimate, state.covariance), psi, cap)
    return Prediction(state.epoch + dt, moments.mean, moments.covariance, flow, state)


def measurement_polynomial(
    measurement: MeasurementModel,
    model: KoopmanModel,
    center: Sequence[float],
    dt: float,
    predicted_center: Union[Sequence[float], None] = None,
    anchor: Union[Sequence[float], None] = None,
) -> List[Polynomial]:
    """Measurement at ``t + dt`` as polynomials in the deviation from ``center`` at ``t``.

    ``h`` is Taylor-expanded around the predicted center (the flow of the
    expansion anchor, ``center`` by default), re-expressed as an observable of
    the model coordinates, and advanced with the Koopman flow.
    """
    start = center if anchor is None else anchor
    if predicted_center is None:
        flow = physical_flow(model, dt, start)
        predicted_center = [p.constant_term().real for p in flow]
    expansion_point = np.asarray(predicted_center, dtype=float)
    expansion = measurement.expand(expansion_point)
    observables = [model.frame.push_forward(p.shift(-expansion_point)) for p in expansion]
    return _anchored_flow(
        model, dt, center, anchor, ObservableSet.from_polynomials(observables, model.basis)
    )


class Update(NamedTuple):
    state: FilterState
    innovation: Any
    innovation_covariance: Any
    gain: Any


def update(
    prediction: Prediction,
    measurement_polys: Sequence[Polynomial],
    observation: Any,
    noise: Any,
    cap: int = 16,
    eig_floor: float = 1e-10,
) -> Update:
    """Linear update with moments of the flow and measurement polynomials.

    Expectations are taken over the prior deviation ``N(0, P_k)``.
    """
    y_obs = np.asarray(observation, dtype=float).ravel()
    R = np.atleast_2d(np.asarray(noise, dtype=float))
    if y_obs.size != len(measurement_polys) or R.shape != (y_obs.size, y_obs.size):
        raise ContractViolation(
            f"Observation of size {y_obs.size} does not match {len(measurement_polys)} channels"
        )
    engine = MomentEngine(prediction.prior.covariance, cap)
    y_hat = engine.means(measurement_polys)
    dx = engine.centered(prediction.flow)
    dy = engine.centered(measurement_polys)
    P_yy = engine.cross_covariance(dy, dy)
    P_yy = 0.5 * (P_yy + P_yy.T) + R
    P_xy = engine.cross_covariance(dx, dy)

    if not np.all(np.isfinite(P_yy)) or np.linalg.cond(P_yy) > SINGULAR_CONDITION:
        raise SingularInnovationError(details={"condition": float(np.linalg.cond(P_yy))})
    try:
        gain = np.linalg.solve(P_yy.T, P_xy.T).T
    except np.linalg.LinAlgError as e:
        raise SingularInnovationError() from e

    innovation = y_obs - y_hat
    mean = prediction.mean + gain @ innovation
    covariance, min_eig = floor_covariance(prediction.covariance - gain @ P_yy @ gain.T)
    trace = float(np.trace(covariance))
    if min_eig < -eig_floor * max(trace, 0.0):
        logger.warning(f"Updated covariance had eigenvalue {min_eig:.3e}; clipped to zero")
    state = FilterState(prediction.epoch, mean, covariance)
    return Update(state, innovation, P_yy, gain)


def check_cadence(times: Sequence[float], t0: float, cadence: float) -> None:
    steps = (np.asarray(times, dtype=float) - t0) / cadence
    off = [t for t, k in zip(times, steps) if round(k) < 1 or abs(k - round(k)) > CADENCE_TOLERANCE]
    if off:
        raise ContractViolation(
            f"Observation epochs {off[:3]} are off the {cadence:g} cadence from t0 = {t0:g}",
            details={"epochs": off, "cadence": cadence},
        )


def run_filter(
    config: FilterConfig,
    measurement: MeasurementModel,
    observations: Iterable[Observation],
    initial: FilterState,
    epochs: Union[Sequence[float], None] = None,
) -> List[FilterRecord]:
    """Alternate predict and update over time-ordered observations.

    With ``recenter`` the shifted basis is re-centered at each updated
    estimate; without it the expansion anchor follows the flow of the initial
    estimate. Extra ``epochs`` without observations get prediction-only
    records from the latest update. Any step failure is re-raised with the
    failing epoch attached.
    """
    obs_list = list(observations)
    times = [o.t for o in obs_list]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ContractViolation("Observations must be time-ordered")
    if config.cadence is not None:
        check_cadence(times, initial.epoch, config.cadence)
    by_time = {o.t: o for o in obs_list}
    timeline = sorted(set(times) | set(epochs or []))
    if timeline and timeline[0] < initial.epoch:
        raise ContractViolation(f"Epoch {timeline[0]} precedes the initial epoch {initial.epoch}")

    model = config.model
    state = initial
    anchor: Union[Any, None] = None
    records: List[FilterRecord] = []
    for t in timeline:
        dt = t - state.epoch
        try:
            prediction = predict(state, model, dt, config.psi, config.order_cap, anchor)
            obs = by_time.get(t)
            if obs is None:
                predicted = FilterState(t, prediction.mean, floor_covariance(prediction.covariance)[0])
                records.append(FilterRecord(predicted))
                continue
            anchor_flow = prediction.flow if anchor is None else physical_flow(model, dt, anchor)
            center = np.array([p.constant_term().real for p in anchor_flow])
            y_polys = measurement_polynomial(measurement, model, state.estimate, dt, center, anchor)
            result = update(
                prediction, y_polys, obs.values, measurement.noise, config.order_cap, config.eig_floor
            )
        except KofxError as e:
            raise FilterStepError(t, e) from e
        records.append(FilterRecord(result.state, result.innovation, result.innovation_covariance))
        if not config.recenter:
            anchor = center
        state = result.state
        logger.debug(f"KOF update t={t:.6g}: |innovation|={np.linalg.norm(result.innovation):.3e}")
    return records
