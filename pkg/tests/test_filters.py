"""Tests for the Koopman operator filter and the benchmark filters."""

from typing import List

import numpy as np
import pytest
import scipy.linalg

from kofx.core.exceptions import (
    ContractViolation,
    FilterStepError,
    SingularInnovationError,
    UnsupportedOrderError,
)
from kofx.filters import (
    ARCSEC,
    AzimuthElevation,
    FilterConfig,
    FilterRecord,
    FilterState,
    LinearMeasurement,
    Observation,
    floor_covariance,
    measurement_polynomial,
    predict,
    run_filter,
    update,
)
from kofx.koopman import KoopmanModel, VectorField, build_model
from kofx.moments import GaussianBelief
from kofx.poly import Domain
from kofx.reference import (
    BenchmarkTuning,
    LinearDynamics,
    TruthSetup,
    compute_filter_weights,
    ekf_step,
    ikf_step,
    run_benchmark,
    run_rng,
    sigma_points,
    simulate,
    unscented_transform,
)
from kofx.reference.filters import kalman_gain, step_function

DAMPED = np.array([[0.0, 1.0], [-1.0, -0.2]])
H = np.array([[1.0, 0.0]])
R = np.array([[0.05**2]])
MU = 0.012150585609624


@pytest.fixture(scope="module")
def linear_model() -> KoopmanModel:
    return build_model(VectorField.linear(DAMPED, Domain.symmetric([5.0, 5.0])), 2)


@pytest.fixture
def measurement() -> LinearMeasurement:
    return LinearMeasurement(H, R)


@pytest.fixture
def initial() -> FilterState:
    return FilterState(0.0, [1.0, 0.0], 0.01 * np.eye(2))


@pytest.fixture
def observations() -> List[Observation]:
    times = np.arange(1, 7) * 0.5
    values = 0.95 * np.exp(-0.1 * times) * np.cos(times) + 0.01 * (-1.0) ** np.arange(6)
    return [Observation(float(t), [v]) for t, v in zip(times, values)]


def kalman_reference(initial: FilterState, observations: List[Observation]) -> List[tuple]:
    """Textbook linear Kalman filter for the damped oscillator."""
    x, P, t = initial.estimate.copy(), initial.covariance.copy(), initial.epoch
    out = []
    for obs in observations:
        Phi = scipy.linalg.expm(DAMPED * (obs.t - t))
        x, P = Phi @ x, Phi @ P @ Phi.T
        S = H @ P @ H.T + R
        K = P @ H.T @ np.linalg.inv(S)
        x = x + K @ (obs.values - H @ x)
        P = P - K @ S @ K.T
        t = obs.t
        out.append((x.copy(), P.copy()))
    return out


def assert_matches_reference(records: List[FilterRecord], expected: List[tuple]) -> None:
    assert len(records) == len(expected)
    for record, (x, P) in zip(records, expected):
        np.testing.assert_allclose(record.state.estimate, x, atol=1e-9)
        np.testing.assert_allclose(record.state.covariance, P, atol=1e-9)


class TestLinearEquivalence:
    """Tests that every filter reduces to the Kalman filter on a linear problem."""

    @pytest.mark.parametrize("psi", [2, 3, 4])
    def test_kof(self, linear_model, measurement, initial, observations, psi: int) -> None:
        """Test the KOF equals the Kalman filter."""
        records = run_filter(FilterConfig(linear_model, psi=psi), measurement, observations, initial)
        assert_matches_reference(records, kalman_reference(initial, observations))
        assert all(r.updated for r in records)

    def test_kof_without_recentering(self, linear_model, measurement, initial, observations) -> None:
        """Test a fixed expansion anchor gives the same answer for a linear flow."""
        config = FilterConfig(linear_model, recenter=False)
        records = run_filter(config, measurement, observations, initial)
        assert_matches_reference(records, kalman_reference(initial, observations))

    @pytest.mark.parametrize("method", ["ekf", "ikf", "ukf"])
    def test_benchmarks(self, method: str, measurement, initial, observations) -> None:
        """Test the benchmark filters equal the Kalman filter."""
        tuning = BenchmarkTuning(alpha=1.0)
        records = run_benchmark(
            method, LinearDynamics(DAMPED), measurement, observations, initial, tuning=tuning
        )
        assert_matches_reference(records, kalman_reference(initial, observations))

    def test_single_iteration_ikf_is_ekf(self) -> None:
        """Test one IKF iteration reproduces the EKF on a nonlinear measurement."""
        dyn = LinearDynamics(np.eye(6) * 0.0)
        meas = AzimuthElevation(MU)
        state = FilterState(0.0, [0.84, 0.01, 0.02, 0.0, 0.0, 0.0], 1e-6 * np.eye(6))
        obs = Observation(0.1, meas.evaluate([0.8405, 0.0102, 0.0199, 0.0, 0.0, 0.0]))
        ekf = ekf_step(state, dyn, meas, obs)
        ikf = ikf_step(state, dyn, meas, obs, iterations=1)
        np.testing.assert_array_equal(ekf.state.estimate, ikf.state.estimate)
        np.testing.assert_array_equal(ekf.state.covariance, ikf.state.covariance)


class TestKoopmanFilter:
    """Tests for KOF prediction, update and the run loop."""

    def test_prediction_is_exact_for_linear_flow(self, linear_model, initial) -> None:
        """Test the predicted moments equal Phi x and Phi P Phi^T."""
        prediction = predict(initial, linear_model, 0.5)
        Phi = scipy.linalg.expm(DAMPED * 0.5)
        assert prediction.epoch == 0.5
        np.testing.assert_allclose(prediction.mean, Phi @ initial.estimate, atol=1e-12)
        np.testing.assert_allclose(prediction.covariance, Phi @ initial.covariance @ Phi.T, atol=1e-12)

    def test_measurement_polynomial_constant(self, linear_model, measurement, initial) -> None:
        """Test the flowed measurement at zero deviation is H Phi x."""
        polys = measurement_polynomial(measurement, linear_model, initial.estimate, 0.5)
        Phi = scipy.linalg.expm(DAMPED * 0.5)
        assert polys[0].constant_term().real == pytest.approx((H @ Phi @ initial.estimate)[0])

    def test_prediction_only_epochs(self, linear_model, measurement, initial, observations) -> None:
        """Test extra epochs produce prediction-only records in time order."""
        records = run_filter(
            FilterConfig(linear_model), measurement, observations[:2], initial, epochs=[0.25, 2.0]
        )
        assert [r.epoch for r in records] == [0.25, 0.5, 1.0, 2.0]
        assert [r.updated for r in records] == [False, True, True, False]
        assert records[0].normalized_innovation() is None

    def test_unordered_observations(self, linear_model, measurement, initial, observations) -> None:
        """Test observations out of time order raise."""
        with pytest.raises(ContractViolation):
            run_filter(FilterConfig(linear_model), measurement, observations[::-1], initial)

    def test_step_failure_carries_epoch(self, linear_model, measurement, observations) -> None:
        """Test a failing step reports its epoch and cause."""
        outside = FilterState(0.0, [10.0, 0.0], 0.01 * np.eye(2))
        with pytest.raises(FilterStepError) as exc_info:
            run_filter(FilterConfig(linear_model), measurement, observations, outside)
        assert exc_info.value.epoch == 0.5
        assert exc_info.value.details["cause"] == "DOMAIN_VIOLATION"

    def test_singular_innovation(self, linear_model, measurement) -> None:
        """Test a zero innovation covariance raises."""
        state = FilterState(0.0, [1.0, 0.0], np.zeros((2, 2)))
        prediction = predict(state, linear_model, 0.5)
        polys = measurement_polynomial(measurement, linear_model, state.estimate, 0.5)
        with pytest.raises(SingularInnovationError):
            update(prediction, polys, [0.8], np.zeros((1, 1)))

    def test_observation_size_checked(self, linear_model, measurement, initial) -> None:
        """Test an observation with the wrong number of channels raises."""
        prediction = predict(initial, linear_model, 0.5)
        polys = measurement_polynomial(measurement, linear_model, initial.estimate, 0.5)
        with pytest.raises(ContractViolation):
            update(prediction, polys, [0.8, 0.1], R)

    def test_noise_free_convergence(self, linear_model, initial) -> None:
        """Test near noise-free full-state measurements pull the estimate onto the truth."""
        sensor = LinearMeasurement(np.eye(2), 1e-12 * np.eye(2))
        truth0 = np.array([1.1, -0.05])
        times = 0.5 * np.arange(1, 7)
        truth = [scipy.linalg.expm(DAMPED * t) @ truth0 for t in times]
        observations = [Observation(float(t), x) for t, x in zip(times, truth)]
        records = run_filter(FilterConfig(linear_model), sensor, observations, initial)
        assert len(records) == 6
        for record, x in zip(records[4:], truth[4:]):
            np.testing.assert_allclose(record.state.estimate, x, atol=1e-6)
            assert np.all(record.state.sigma < 1e-5)

    def test_innovations_are_white(self, linear_model, measurement) -> None:
        """Test normalized innovations of a simulated run behave like unit white noise."""
        epochs = [0.5 * k for k in range(41)]
        setup = TruthSetup(
            dynamics=LinearDynamics(DAMPED),
            belief=GaussianBelief.isotropic([1.0, 0.0], 0.1),
            t0=0.0,
            epochs=epochs,
            measurement=measurement,
            measurement_epochs=epochs[1:],
        )
        simulation = simulate(setup, run_rng(7, 0))
        config = FilterConfig(linear_model)
        records = run_filter(config, measurement, simulation.observations, setup.initial_state())
        nu = np.array([r.normalized_innovation()[0] for r in records])
        bound = 4.0 / np.sqrt(nu.size)
        assert nu.size == 40
        assert abs(nu.mean()) < bound
        assert 0.4 < np.mean(nu**2) < 1.8
        assert abs(np.sum(nu[1:] * nu[:-1]) / np.sum(nu**2)) < bound

    def test_config_validation(self, linear_model) -> None:
        """Test unsupported moment orders and cadences raise."""
        with pytest.raises(UnsupportedOrderError):
            FilterConfig(linear_model, psi=5)
        with pytest.raises(ContractViolation):
            FilterConfig(linear_model, cadence=0.0)

    def test_observations_on_cadence(self, linear_model, measurement, initial, observations) -> None:
        """Test observations on the configured cadence are accepted, including gaps."""
        config = FilterConfig(linear_model, cadence=0.5)
        records = run_filter(config, measurement, observations[::2], initial)
        assert [r.state.epoch for r in records] == [0.5, 1.5, 2.5]

    @pytest.mark.parametrize("epoch", [0.75, 0.0])
    def test_observation_off_cadence(self, linear_model, measurement, initial, epoch: float) -> None:
        """Test an observation between cadence ticks or at the initial epoch raises."""
        config = FilterConfig(linear_model, cadence=0.5)
        with pytest.raises(ContractViolation) as exc_info:
            run_filter(config, measurement, [Observation(epoch, [0.9])], initial)
        assert exc_info.value.details["epochs"] == [epoch]


class TestMeasurementModels:
    """Tests for the measurement functions."""

    def test_azimuth_elevation_expansion(self) -> None:
        """Test the Taylor expansion against exact evaluation."""
        meas = AzimuthElevation(MU, taylor_order=3)
        center = np.array([0.84, 0.01, 0.02, 0.0, 0.0, 0.0])
        polys = meas.expand(center)
        exact = meas.evaluate(center)
        np.testing.assert_allclose([p.constant_term().real for p in polys], exact, atol=1e-14)
        delta = np.array([1e-4, -2e-4, 1e-4, 0.0, 0.0, 0.0])
        approx = np.array([p.evaluate(delta).real for p in polys])
        np.testing.assert_allclose(approx, meas.evaluate(center + delta), atol=1e-10)

    def test_azimuth_elevation_jacobian(self) -> None:
        """Test the Jacobian against central differences."""
        meas = AzimuthElevation(MU)
        center = np.array([0.84, 0.01, 0.02, 0.0, 0.0, 0.0])
        eps = 1e-7
        numeric = np.column_stack(
            [(meas.evaluate(center + eps * e) - meas.evaluate(center - eps * e)) / (2 * eps) for e in np.eye(6)]
        )
        np.testing.assert_allclose(meas.jacobian(center), numeric, atol=1e-7)

    def test_default_noise(self) -> None:
        """Test the default noise is 10 arcsec per channel."""
        meas = AzimuthElevation(MU)
        np.testing.assert_allclose(np.sqrt(np.diag(meas.noise)), 10 * ARCSEC)

    def test_noise_must_be_positive_definite(self) -> None:
        """Test a singular noise covariance raises."""
        with pytest.raises(ContractViolation):
            LinearMeasurement(H, [[0.0]])

    def test_matrix_rows_match_noise(self) -> None:
        """Test the measurement matrix and noise sizes agree."""
        with pytest.raises(ContractViolation):
            LinearMeasurement(np.eye(2), R)


class TestUnscented:
    """Tests for unscented transform helpers."""

    @pytest.mark.parametrize("alpha", [1e-3, 0.5, 1.0])
    def test_weights_sum_to_one(self, alpha: float) -> None:
        """Test mean weights sum to one."""
        weights = compute_filter_weights(4, alpha)
        assert np.sum(weights.mean) == pytest.approx(1.0)

    def test_sigma_points_recover_moments(self) -> None:
        """Test the transform of the sigma points returns the input moments."""
        mean = np.array([1.0, -2.0, 0.5])
        cov = np.array([[1.0, 0.2, 0.0], [0.2, 0.5, 0.1], [0.0, 0.1, 0.3]])
        weights = compute_filter_weights(3, alpha=1.0)
        points = sigma_points(mean, cov, weights.lam)
        assert points.shape == (7, 3)
        m, P = unscented_transform(points, weights)
        np.testing.assert_allclose(m, mean)
        np.testing.assert_allclose(P, cov, atol=1e-12)

    def test_singular_gain(self) -> None:
        """Test a zero innovation covariance raises."""
        with pytest.raises(SingularInnovationError):
            kalman_gain(np.zeros((2, 1)), np.zeros((1, 1)))

    def test_unknown_method(self) -> None:
        """Test an unknown benchmark name raises."""
        with pytest.raises(ContractViolation):
            step_function("pf")

    def test_invalid_tuning(self) -> None:
        """Test alpha outside (0, 1] raises."""
        with pytest.raises(ContractViolation):
            BenchmarkTuning(alpha=0.0)


class TestStateHelpers:
    """Tests for covariance and record helpers."""

    def test_floor_covariance(self) -> None:
        """Test negative eigenvalues are clipped."""
        cov, min_eig = floor_covariance(np.array([[1.0, 0.0], [0.0, -1e-3]]))
        assert min_eig == pytest.approx(-1e-3)
        assert np.min(np.linalg.eigvalsh(cov)) >= 0.0

    def test_normalized_innovation(self) -> None:
        """Test whitening by the innovation covariance."""
        record = FilterRecord(FilterState(1.0, [0.0], [[1.0]]), np.array([2.0]), np.array([[4.0]]))
        np.testing.assert_allclose(record.normalized_innovation(), [1.0])
        assert record.updated
        assert record.epoch == 1.0
