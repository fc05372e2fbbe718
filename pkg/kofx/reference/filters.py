"""Benchmark filters: EKF, iterated EKF and UKF on the same state and record types as the KOF."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from kofx.core.config import FilterSettings, UKFConfig
from kofx.core.exceptions import ContractViolation, FilterStepError, KofxError, SingularInnovationError
from kofx.filters.measurement import MeasurementModel
from kofx.filters.state import FilterRecord, FilterState, Observation, floor_covariance, symmetrize
from kofx.reference.dynamics import Dynamics

logger = logging.getLogger(__name__)

METHODS = ("ekf", "ikf", "ukf")


@dataclass(frozen=True)
class BenchmarkTuning:
    """IKF iteration control and unscented transform parameters."""

    ikf_iterations: int = 5
    ikf_tolerance: float = 1e-10
    alpha: float = 1e-3
    beta: float = 2.0
    kappa: float = 0.0

    def __post_init__(self) -> None:
        if self.ikf_iterations < 1:
            raise ContractViolation("IKF needs at least one iteration")
        if not 0 < self.alpha <= 1:
            raise ContractViolation(f"UKF alpha must lie in (0, 1], got {self.alpha}")

    @classmethod
    def from_settings(cls, filter_settings: FilterSettings, ukf: UKFConfig) -> BenchmarkTuning:
        return cls(
            ikf_iterations=filter_settings.ikf_iterations,
            ikf_tolerance=filter_settings.ikf_tolerance,
            alpha=ukf.alpha,
            beta=ukf.beta,
            kappa=ukf.kappa,
        )


class Gain(NamedTuple):
    gain: Any
    innovation_covariance: Any


def kalman_gain(cross_covariance: Any, innovation_covariance: Any) -> Gain:
    """``G = P_xy P_yy^-1`` through a symmetric positive definite solve."""
    S = symmetrize(innovation_covariance)
    try:
        gain = scipy.linalg.solve(S, np.asarray(cross_covariance).T, assume_a="pos").T
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SingularInnovationError(details={"reason": str(e)}) from e
    return Gain(gain, S)


def _posterior(epoch: float, mean: Any, covariance: Any, gain: Gain, innovation: Any) -> FilterRecord:
    P = covariance - gain.gain @ gain.innovation_covariance @ gain.gain.T
    state = FilterState(epoch, mean, floor_covariance(P)[0])
    return FilterRecord(state, innovation, gain.innovation_covariance)


# Extended filters


def ekf_predict(state: FilterState, dynamics: Dynamics, t: float) -> Tuple[Any, Any]:
    """Propagate the mean and ``Phi P Phi^T``."""
    mean, phi = dynamics.propagate_with_stm(state.estimate, state.epoch, t)
    return mean, symmetrize(phi @ state.covariance @ phi.T)


def ekf_step(
    state: FilterState,
    dynamics: Dynamics,
    measurement: MeasurementModel,
    observation: Observation,
) -> FilterRecord:
    mean, cov = ekf_predict(state, dynamics, observation.t)
    return _iterated_update(observation, mean, cov, measurement, iterations=1, tolerance=0.0)


def ikf_step(
    state: FilterState,
    dynamics: Dynamics,
    measurement: MeasurementModel,
    observation: Observation,
    iterations: int = 5,
    tolerance: float = 1e-10,
) -> FilterRecord:
    """EKF prediction followed by a Gauss-Newton re-linearized update.

    One iteration reproduces the EKF exactly.
    """
    mean, cov = ekf_predict(state, dynamics, observation.t)
    return _iterated_update(observation, mean, cov, measurement, iterations, tolerance)


def _iterated_update(
    observation: Observation,
    prior_mean: Any,
    prior_cov: Any,
    measurement: MeasurementModel,
    iterations: int,
    tolerance: float,
) -> FilterRecord:
    R = measurement.noise
    x_i = prior_mean
    for i in range(iterations):
        H = measurement.jacobian(x_i)
        predicted = measurement.evaluate(x_i) + H @ (prior_mean - x_i)
        gain = kalman_gain(prior_cov @ H.T, H @ prior_cov @ H.T + R)
        innovation = observation.values - predicted
        x_next = prior_mean + gain.gain @ innovation
        step = float(np.linalg.norm(x_next - x_i))
        x_i = x_next
        if i > 0 and step <= tolerance:
            break
    logger.debug(f"Iterated update at t={observation.t:.6g} stopped after {i + 1} iterations")
    return _posterior(observation.t, x_i, prior_cov, gain, innovation)


# Unscented filter


class UnscentedWeights(NamedTuple):
    mean: Any
    covariance: Any
    lam: float


def compute_filter_weights(n: int, alpha: float = 1e-3, beta: float = 2.0, kappa: float = 0.0) -> UnscentedWeights:
    """Scaled unscented transform weights for ``2n + 1`` sigma points."""
    lam = alpha**2 * (n + kappa) - n
    c = 0.5 / (n + lam)
    Wm = np.full(2 * n + 1, c)
    Wc = np.full(2 * n + 1, c)
    Wm[0] = lam / (n + lam)
    Wc[0] = lam / (n + lam) + (1.0 - alpha**2 + beta)
    return UnscentedWeights(Wm, Wc, lam)


def _matrix_sqrt(matrix: Any) -> Any:
    """Upper Cholesky factor, falling back to the symmetric eigen square root."""
    try:
        return scipy.linalg.cholesky(matrix, lower=False)
    except np.linalg.LinAlgError:
        values, vectors = np.linalg.eigh(symmetrize(matrix))
        return (vectors * np.sqrt(np.clip(values, 0.0, None))).T


def sigma_points(mean: Any, covariance: Any, lam: float) -> Any:
    """Rows ``x``, ``x + U_i``, ``x - U_i`` with ``U^T U = (n + lam) P``."""
    x = np.asarray(mean, dtype=float)
    n = x.size
    U = _matrix_sqrt((n + lam) * np.asarray(covariance, dtype=float))
    return np.vstack([x, x + U, x - U])


def unscented_transform(sigmas: Any, weights: UnscentedWeights, noise: Union[Any, None] = None) -> Tuple[Any, Any]:
    mean = weights.mean @ sigmas
    y = sigmas - mean
    cov = (y.T * weights.covariance) @ y
    if noise is not None:
        cov = cov + noise
    return mean, symmetrize(cov)


def cross_variance(x: Any, z: Any, sigmas_x: Any, sigmas_z: Any, weights: UnscentedWeights) -> Any:
    return ((sigmas_x - x).T * weights.covariance) @ (sigmas_z - z)


def ukf_predict(
    state: FilterState,
    dynamics: Dynamics,
    t: float,
    weights: UnscentedWeights,
) -> Tuple[Any, Any, Any]:
    """Propagated sigma points and their mean and covariance."""
    sigmas = sigma_points(state.estimate, state.covariance, weights.lam)
    propagated = np.array([dynamics.propagate(s, state.epoch, t) for s in sigmas])
    mean, cov = unscented_transform(propagated, weights)
    return propagated, mean, cov


def ukf_step(
    state: FilterState,
    dynamics: Dynamics,
    measurement: MeasurementModel,
    observation: Observation,
    alpha: float = 1e-3,
    beta: float = 2.0,
    kappa: float = 0.0,
) -> FilterRecord:
    """Unscented prediction; the propagated sigma points feed the measurement transform."""
    weights = compute_filter_weights(state.dim, alpha, beta, kappa)
    propagated, mean, cov = ukf_predict(state, dynamics, observation.t, weights)
    sigmas_z = np.array([measurement.evaluate(s) for s in propagated])
    z_mean, S = unscented_transform(sigmas_z, weights, measurement.noise)
    gain = kalman_gain(cross_variance(mean, z_mean, propagated, sigmas_z, weights), S)
    innovation = observation.values - z_mean
    return _posterior(observation.t, mean + gain.gain @ innovation, cov, gain, innovation)


# Drivers

StepFunction = Callable[[FilterState, Dynamics, MeasurementModel, Observation], FilterRecord]


def step_function(method: str, tuning: Union[BenchmarkTuning, None] = None) -> StepFunction:
    tuning = tuning or BenchmarkTuning()
    steps: Dict[str, StepFunction] = {
        "ekf": ekf_step,
        "ikf": lambda s, d, m, o: ikf_step(s, d, m, o, tuning.ikf_iterations, tuning.ikf_tolerance),
        "ukf": lambda s, d, m, o: ukf_step(s, d, m, o, tuning.alpha, tuning.beta, tuning.kappa),
    }
    if method not in steps:
        raise ContractViolation(f"Unknown benchmark filter '{method}'; expected one of {METHODS}")
    return steps[method]


def predict_only(
    method: str,
    state: FilterState,
    dynamics: Dynamics,
    t: float,
    tuning: Union[BenchmarkTuning, None] = None,
) -> FilterState:
    tuning = tuning or BenchmarkTuning()
    if method == "ukf":
        weights = compute_filter_weights(state.dim, tuning.alpha, tuning.beta, tuning.kappa)
        _, mean, cov = ukf_predict(state, dynamics, t, weights)
    else:
        mean, cov = ekf_predict(state, dynamics, t)
    return FilterState(t, mean, floor_covariance(cov)[0])


def run_benchmark(
    method: str,
    dynamics: Dynamics,
    measurement: MeasurementModel,
    observations: Iterable[Observation],
    initial: FilterState,
    epochs: Union[Sequence[float], None] = None,
    tuning: Union[BenchmarkTuning, None] = None,
) -> List[FilterRecord]:
    """Run one benchmark filter over time-ordered observations.

    Extra ``epochs`` get prediction-only records from the latest update.
    """
    step = step_function(method, tuning)
    obs_list = list(observations)
    times = [o.t for o in obs_list]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ContractViolation("Observations must be time-ordered")
    by_time = {o.t: o for o in obs_list}

    state = initial
    records: List[FilterRecord] = []
    for t in sorted(set(times) | set(epochs or [])):
        try:
            obs = by_time.get(t)
            if obs is None:
                records.append(FilterRecord(predict_only(method, state, dynamics, t, tuning)))
                continue
            record = step(state, dynamics, measurement, obs)
        except KofxError as e:
            raise FilterStepError(t, e) from e
        records.append(record)
        state = record.state
    return records
