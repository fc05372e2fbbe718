"""Tests for Koopman matrix assembly, spectral decomposition and flows."""

import json
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg

from kofx.core.exceptions import (
    ContractViolation,
    DomainViolationError,
    FlowRangeError,
    InputFileError,
    NonDiagonalizableError,
)
from kofx.koopman import (
    AffineFrame,
    KoopmanModel,
    ObservableSet,
    VectorField,
    build_koopman_matrix,
    build_model,
    eigendecompose,
    flow_polynomial,
    identity_observables,
    koopman_modes,
    load_model,
    physical_flow,
    save_model,
    shifted_flow,
)
from kofx.poly import BasisSet, Domain, Polynomial

DAMPED = np.array([[0.0, 1.0], [-1.0, -0.2]])


@pytest.fixture
def decay_model() -> KoopmanModel:
    """``dx/dt = -x`` on [-1, 1] with cubic basis."""
    return build_model(VectorField.linear([[-1.0]], Domain.unit(1)), 3)


@pytest.fixture
def cascade_field() -> VectorField:
    """``dx/dt = -x, dy/dt = -3y + x^2``; span{1, x, y, x^2} is invariant."""
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    return VectorField((-x, y.scale(-3.0) + x * x), Domain.symmetric([1.0, 1.0]))


def cascade_solution(state: np.ndarray, t: float) -> np.ndarray:
    x0, y0 = state
    return np.array(
        [x0 * np.exp(-t), y0 * np.exp(-3 * t) + x0**2 * (np.exp(-2 * t) - np.exp(-3 * t))]
    )


def flow_jacobian(polys: list) -> np.ndarray:
    dim = polys[0].dim
    units = [tuple(int(j == k) for k in range(dim)) for j in range(dim)]
    return np.array([[p.coefficient(u).real for u in units] for p in polys])


def assert_spectrum(computed: np.ndarray, expected: list, atol: float = 1e-8) -> None:
    remaining = list(np.asarray(computed, dtype=complex))
    assert len(remaining) == len(expected)
    for value in expected:
        k = int(np.argmin([abs(value - c) for c in remaining]))
        assert abs(remaining.pop(k) - value) < atol


class TestKoopmanMatrix:
    """Tests for Galerkin matrix assembly."""

    def test_decay_matrix_is_diagonal_on_degree_one(self) -> None:
        """Test dx/dt = -x gives diag(0, -1) on the first two Legendre functions."""
        basis = BasisSet(Domain.unit(1), 1)
        K = build_koopman_matrix(VectorField.linear([[-1.0]], Domain.unit(1)), basis)
        np.testing.assert_allclose(K, np.diag([0.0, -1.0]), atol=1e-14)

    def test_dimension_mismatch(self) -> None:
        """Test a field and basis of different dimension raise."""
        with pytest.raises(ContractViolation):
            build_koopman_matrix(
                VectorField.linear([[-1.0]], Domain.unit(1)), BasisSet(Domain.unit(2), 1)
            )

    def test_field_component_count_checked(self) -> None:
        """Test a vector field needs one component per dimension."""
        with pytest.raises(ContractViolation):
            VectorField((Polynomial.variable(2, 0),), Domain.unit(2))

    def test_linear_part(self) -> None:
        """Test the Jacobian at the origin of a linear field."""
        field = VectorField.linear(DAMPED, Domain.unit(2))
        np.testing.assert_allclose(field.linear_part(), DAMPED)


class TestEigendecompose:
    """Tests for the left eigendecomposition."""

    def test_decay_spectrum(self, decay_model: KoopmanModel) -> None:
        """Test eigenvalues 0, -1, -2, -3 in descending order."""
        np.testing.assert_allclose(decay_model.eigenvalues, [0.0, -1.0, -2.0, -3.0], atol=1e-10)
        assert decay_model.residual() < 1e-10
        assert decay_model.inverse is not None
        assert decay_model.inverse_residual() < 1e-10

    def test_decay_eigenfunctions_are_monomials(self, decay_model: KoopmanModel) -> None:
        """Test the k-th eigenfunction of dx/dt = -x is proportional to x^k."""
        for k, row in enumerate(decay_model.eigenvectors):
            phi = decay_model.basis.reconstruct(row)
            lead = phi.coefficient((k,))
            assert abs(lead) > 1e-6
            assert phi.allclose(Polynomial(1, {(k,): lead}), atol=1e-10)

    def test_rows_normalized(self, decay_model: KoopmanModel) -> None:
        """Test unit row norms with a real positive largest entry."""
        C = decay_model.eigenvectors
        np.testing.assert_allclose(np.linalg.norm(C, axis=1), 1.0)
        for row in C:
            pivot = row[np.argmax(np.abs(row))]
            assert pivot.real > 0
            assert abs(pivot.imag) < 1e-12

    @pytest.mark.parametrize("max_degree", [2, 3, 4])
    def test_decay_spectrum_by_degree(self, max_degree: int) -> None:
        """Test dx/dt = -x has eigenvalues 0, -1, ..., -max_degree."""
        model = build_model(VectorField.linear([[-1.0]], Domain.unit(1)), max_degree)
        np.testing.assert_allclose(model.eigenvalues, -np.arange(max_degree + 1.0), atol=1e-8)

    def test_harmonic_oscillator_spectrum(self) -> None:
        """Test the quadratic basis of a rotation carries 0, 0, +-i, +-2i."""
        field = VectorField.linear([[0.0, 1.0], [-1.0, 0.0]], Domain.symmetric([1.0, 1.0]))
        model = build_model(field, 2)
        assert_spectrum(model.eigenvalues, [0.0, 0.0, 1j, -1j, 2j, -2j])

    def test_spectrum_is_lattice_of_linear_eigenvalues(self) -> None:
        """Test a linear field gives p lambda + q conj(lambda) for p + q up to the degree."""
        model = build_model(VectorField.linear(DAMPED, Domain.symmetric([5.0, 5.0])), 3)
        lam = -0.1 + 1j * np.sqrt(0.99)
        expected = [p * lam + q * np.conj(lam) for p in range(4) for q in range(4 - p)]
        assert_spectrum(model.eigenvalues, expected)

    def test_conjugate_pairs_ordered(self) -> None:
        """Test a complex pair follows real-part order with positive imaginary part first."""
        model = build_model(VectorField.linear(DAMPED, Domain.symmetric([5.0, 5.0])), 1)
        omega = np.sqrt(0.99)
        np.testing.assert_allclose(
            model.eigenvalues, [0.0, -0.1 + 1j * omega, -0.1 - 1j * omega], atol=1e-10
        )

    def test_order_is_deterministic(self) -> None:
        """Test repeated decompositions agree exactly."""
        field = VectorField.linear(DAMPED, Domain.symmetric([5.0, 5.0]))
        K = build_koopman_matrix(field, BasisSet(field.domain, 2))
        first = eigendecompose(K)
        second = eigendecompose(K)
        np.testing.assert_array_equal(first.eigenvalues, second.eigenvalues)
        np.testing.assert_array_equal(first.eigenvectors, second.eigenvectors)

    def test_defective_matrix_rejected(self) -> None:
        """Test a Jordan block raises."""
        with pytest.raises(NonDiagonalizableError) as exc_info:
            eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert exc_info.value.exit_code == 2

    def test_non_square_rejected(self) -> None:
        """Test a rectangular matrix raises."""
        with pytest.raises(ContractViolation):
            eigendecompose(np.ones((2, 3)))

    def test_inverse_skipped_above_limit(self) -> None:
        """Test an explicit inverse is only formed below the inverse limit."""
        result = eigendecompose(np.diag([1.0, 2.0]), inverse_limit=0.5)
        assert result.inverse is None
        assert result.condition_number == pytest.approx(1.0)


class TestFlow:
    """Tests for analytical flow polynomials."""

    def test_linear_flow_matches_matrix_exponential(self) -> None:
        """Test the physical flow of a linear field is exp(A t)."""
        A = np.diag([-0.5, -1.0])
        model = build_model(VectorField.linear(A, Domain.symmetric([2.0, 2.0])), 1)
        center = np.array([0.3, -0.2])
        flow = physical_flow(model, 1.3, center)
        Phi = scipy.linalg.expm(A * 1.3)
        np.testing.assert_allclose(flow_jacobian(flow), Phi, atol=1e-12)
        np.testing.assert_allclose([p.constant_term().real for p in flow], Phi @ center, atol=1e-12)

    def test_zero_time_is_identity(self, cascade_field: VectorField) -> None:
        """Test the flow at t = 0 returns the initial state."""
        model = build_model(cascade_field, 2)
        center = np.array([0.4, 0.1])
        flow = physical_flow(model, 0.0, center)
        np.testing.assert_allclose([p.constant_term().real for p in flow], center, atol=1e-12)
        np.testing.assert_allclose(flow_jacobian(flow), np.eye(2), atol=1e-12)

    def test_nonlinear_invariant_subspace_is_exact(self, cascade_field: VectorField) -> None:
        """Test a nonlinear flow closed on the basis is reproduced exactly."""
        model = build_model(cascade_field, 2)
        center = np.array([0.3, -0.2])
        t = 0.7
        flow = physical_flow(model, t, center)
        for delta in ([0.0, 0.0], [0.05, 0.1], [-0.2, 0.15]):
            expected = cascade_solution(center + np.array(delta), t)
            values = np.array([p.evaluate(delta).real for p in flow])
            np.testing.assert_allclose(values, expected, atol=1e-10)

    def test_flow_without_explicit_inverse(self, cascade_field: VectorField) -> None:
        """Test linear solves reproduce the explicit-inverse flow."""
        with_inverse = build_model(cascade_field, 2)
        with_solves = build_model(cascade_field, 2, inverse_limit=0.0)
        assert with_solves.inverse is None
        center = [0.2, 0.3]
        a = physical_flow(with_inverse, 0.5, center)
        b = physical_flow(with_solves, 0.5, center)
        for p, q in zip(a, b):
            assert p.allclose(q, atol=1e-10)

    def test_complex_frame_gives_real_flow(self) -> None:
        """Test a diagonal model in z = x + iy coordinates returns the real rotation."""
        M = np.array([[0.0, 1.0], [-1.0, 0.0]])
        frame = AffineFrame(np.array([[1.0, 1.0j], [1.0, -1.0j]]), np.zeros(2))
        field = VectorField.linear(np.diag([-1.0j, 1.0j]), Domain.symmetric([3.0, 3.0]))
        model = build_model(field, 1, frame=frame)
        center = np.array([0.5, 0.2])
        flow = physical_flow(model, 0.9, center)
        Phi = scipy.linalg.expm(M * 0.9)
        for p in flow:
            assert p.imag_residual() == 0.0
        np.testing.assert_allclose(flow_jacobian(flow), Phi, atol=1e-12)
        np.testing.assert_allclose([p.constant_term().real for p in flow], Phi @ center, atol=1e-12)

    def test_semigroup_property(self, cascade_field: VectorField) -> None:
        """Test flowing for 0.3 and then 0.5 equals flowing for 0.8."""
        model = build_model(cascade_field, 2)
        obs = identity_observables(model)
        points = np.random.default_rng(11).uniform(-0.5, 0.5, size=(100, 2))

        def apply(t: float, states: np.ndarray) -> np.ndarray:
            return np.column_stack([p.evaluate(states).real for p in flow_polynomial(model, obs, t)])

        np.testing.assert_allclose(apply(0.5, apply(0.3, points)), apply(0.8, points), atol=1e-8)

    def test_quarter_turn_of_rotation(self) -> None:
        """Test dx/dt = y, dy/dt = -x maps (x, y) to (y, -x) after pi/2."""
        field = VectorField.linear([[0.0, 1.0], [-1.0, 0.0]], Domain.symmetric([1.0, 1.0]))
        model = build_model(field, 1)
        flow = physical_flow(model, np.pi / 2, [0.3, -0.2])
        np.testing.assert_allclose([p.constant_term().real for p in flow], [-0.2, -0.3], atol=1e-10)
        np.testing.assert_allclose(flow_jacobian(flow), [[0.0, 1.0], [-1.0, 0.0]], atol=1e-10)
        full = physical_flow(model, 2 * np.pi, [0.3, -0.2])
        np.testing.assert_allclose([p.constant_term().real for p in full], [0.3, -0.2], atol=1e-10)

    def test_shifted_flow_constant_is_value_at_center(self, cascade_field: VectorField) -> None:
        """Test the constant term of the shifted flow is the flow at the center."""
        model = build_model(cascade_field, 2)
        obs = identity_observables(model)
        center = np.array([0.25, -0.1])
        plain = flow_polynomial(model, obs, 0.4)
        shifted = shifted_flow(model, obs, 0.4, center)
        for p, q in zip(plain, shifted):
            assert q.constant_term() == pytest.approx(p.evaluate(center))

    def test_overflow_rejected(self) -> None:
        """Test exponents beyond the overflow limit raise."""
        model = build_model(VectorField.linear(np.diag([1.0, 2.0]), Domain.unit(2)), 1)
        with pytest.raises(FlowRangeError):
            physical_flow(model, 400.0, [0.0, 0.0])

    def test_center_outside_domain(self, decay_model: KoopmanModel) -> None:
        """Test a center outside the basis domain raises."""
        with pytest.raises(DomainViolationError):
            physical_flow(decay_model, 0.1, [1.5])

    def test_koopman_modes_reconstruct_observables(self, cascade_field: VectorField) -> None:
        """Test B C recovers the observable coefficients."""
        model = build_model(cascade_field, 2)
        obs = ObservableSet.from_polynomials(
            [Polynomial.variable(2, 0) * Polynomial.variable(2, 1)], model.basis
        )
        B = koopman_modes(model, obs)
        np.testing.assert_allclose(B @ model.eigenvectors, obs.coefficients, atol=1e-10)

    def test_empty_observable_set(self, decay_model: KoopmanModel) -> None:
        """Test an observable set needs at least one polynomial."""
        with pytest.raises(ContractViolation):
            ObservableSet.from_polynomials([], decay_model.basis)


class TestFrame:
    """Tests for affine coordinate frames."""

    def test_round_trip_and_composition(self) -> None:
        """Test forward and inverse maps and frame chaining."""
        first = AffineFrame(np.diag([2.0, 4.0]), [1.0, -1.0])
        second = AffineFrame(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.5, 0.0])
        x = np.array([0.3, 0.7])
        np.testing.assert_allclose(first.from_model(first.to_model(x)).real, x)
        chained = first.then(second)
        np.testing.assert_allclose(chained.to_model(x), second.to_model(first.to_model(x)))

    def test_model_sigma(self) -> None:
        """Test model-coordinate sigmas of a real and a complex frame."""
        P = np.diag([4.0, 1.0])
        frame = AffineFrame(np.array([[1.0, 2.0], [0.0, 3.0]]), [0.0, 0.0])
        np.testing.assert_allclose(frame.model_sigma(P), [np.sqrt(8.0), 3.0])
        rotating = AffineFrame(np.array([[1.0, 1.0j], [1.0, -1.0j]]) / np.sqrt(2.0), [0.0, 0.0])
        np.testing.assert_allclose(rotating.model_sigma(P), [np.sqrt(2.5), np.sqrt(2.5)])

    def test_push_forward_then_pull_back(self) -> None:
        """Test a physical polynomial survives the trip through model coordinates."""
        frame = AffineFrame(np.diag([0.5, 2.0]), [1.0, 0.0])
        p = Polynomial(2, {(1, 0): 1.0, (1, 1): -2.0, (0, 0): 0.3})
        center = np.array([0.2, -0.4])
        back = frame.pull_back(frame.push_forward(p), center)
        assert back.allclose(p.shift(center), atol=1e-12)

    def test_singular_matrix_rejected(self) -> None:
        """Test a singular frame matrix raises."""
        with pytest.raises(ContractViolation):
            AffineFrame(np.ones((2, 2)), [0.0, 0.0])


class TestSerialization:
    """Tests for model artifacts."""

    def test_save_and_load(self, cascade_field: VectorField, tmp_path: Path) -> None:
        """Test a loaded model yields the same flow."""
        model = build_model(cascade_field, 2, metadata={"scenario": "cascade"})
        path = save_model(model, tmp_path / "model.json")
        document = json.loads(path.read_text())
        assert document["format_version"] == 1
        assert document["metadata"] == {"scenario": "cascade"}

        loaded = load_model(path)
        np.testing.assert_allclose(loaded.eigenvalues, model.eigenvalues)
        center = [0.1, 0.2]
        for p, q in zip(physical_flow(model, 0.3, center), physical_flow(loaded, 0.3, center)):
            assert p.allclose(q, atol=1e-12)

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test a missing artifact raises an input error."""
        with pytest.raises(InputFileError) as exc_info:
            load_model(tmp_path / "absent.json")
        assert exc_info.value.exit_code == 1

    def test_corrupt_file(self, tmp_path: Path) -> None:
        """Test malformed JSON raises an input error."""
        path = tmp_path / "model.json"
        path.write_text("{not json")
        with pytest.raises(InputFileError):
            load_model(path)

    def test_tampered_eigenvalues_rejected(
        self, decay_model: KoopmanModel, tmp_path: Path
    ) -> None:
        """Test an artifact whose decomposition no longer holds is refused."""
        path = save_model(decay_model, tmp_path / "model.json")
        document = json.loads(path.read_text())
        document["eigenvalues"]["re"][1] += 0.5
        path.write_text(json.dumps(document))
        with pytest.raises(ContractViolation):
            load_model(path)
