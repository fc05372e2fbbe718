"""Tests for the restricted three-body models around the collinear points."""

import numpy as np
import pytest

from kofx.core.exceptions import InvalidRegimeError, ParameterError, SingularityError
from kofx.crtbp import (
    CRTBPParams,
    characteristic_rates,
    cn_coefficients,
    from_libration,
    from_normal,
    full_jacobian,
    full_rhs,
    hamiltonian_normal_form,
    jacobi_constant,
    legendre_recursion_Tn,
    polynomial_eom,
    solve_euler_quintic,
    symplectic_basis,
    to_libration,
    to_normal,
)
from kofx.crtbp.normal_form import SYMPLECTIC
from kofx.poly import Polynomial
from kofx.reference import IntegratorConfig, rk78_integrate

MU_EARTH_MOON = 0.012150585609624
MU_SUN_EARTH = 3.040423398444176e-06


@pytest.fixture(params=["L1", "L2"])
def params(request: pytest.FixtureRequest) -> CRTBPParams:
    return CRTBPParams(MU_EARTH_MOON, request.param, expansion_order=6)


class TestParameters:
    """Tests for libration point geometry."""

    @pytest.mark.parametrize("point,gamma", [("L1", 0.15093), ("L2", 0.16783)])
    def test_earth_moon_gamma(self, point: str, gamma: float) -> None:
        """Test the libration distances of the Earth-Moon system."""
        assert solve_euler_quintic(MU_EARTH_MOON, point) == pytest.approx(gamma, abs=1e-4)

    def test_sun_earth_near_hill_radius(self) -> None:
        """Test small mass ratios put the points near the Hill radius."""
        hill = (MU_SUN_EARTH / 3.0) ** (1.0 / 3.0)
        for point in ("L1", "L2"):
            assert solve_euler_quintic(MU_SUN_EARTH, point) == pytest.approx(hill, rel=0.02)

    def test_libration_point_is_equilibrium(self, params: CRTBPParams) -> None:
        """Test the full dynamics vanish at the libration point."""
        np.testing.assert_allclose(full_rhs(params.libration_state(), params.mu), 0.0, atol=1e-10)

    def test_c2_matches_full_jacobian(self, params: CRTBPParams) -> None:
        """Test c2 against the potential curvature at the point."""
        c2 = cn_coefficients(params)[0]
        jac = full_jacobian(params.libration_state(), params.mu)
        assert jac[3, 0] == pytest.approx(1.0 + 2.0 * c2, rel=1e-10)
        assert jac[4, 1] == pytest.approx(1.0 - c2, rel=1e-10)
        assert jac[5, 2] == pytest.approx(-c2, rel=1e-10)

    def test_with_order(self, params: CRTBPParams) -> None:
        """Test changing the expansion order keeps the geometry."""
        other = params.with_order(3)
        assert other.gamma == params.gamma
        assert len(cn_coefficients(other)) == 2

    @pytest.mark.parametrize(
        "mu,point,order", [(0.0, "L1", 4), (0.6, "L1", 4), (0.01, "L3", 4), (0.01, "L1", 1)]
    )
    def test_invalid_parameters(self, mu: float, point: str, order: int) -> None:
        """Test parameters outside the model raise an input error."""
        with pytest.raises(ParameterError) as exc_info:
            CRTBPParams(mu, point, order)  # type: ignore[arg-type]
        assert exc_info.value.exit_code == 1


class TestFullDynamics:
    """Tests for the rotating-frame equations of motion."""

    def test_jacobian_matches_finite_differences(self) -> None:
        """Test the analytic Jacobian against central differences."""
        state = np.array([0.83, 0.02, -0.01, 0.003, -0.02, 0.01])
        eps = 1e-6
        numeric = np.column_stack(
            [
                (full_rhs(state + eps * e, MU_EARTH_MOON) - full_rhs(state - eps * e, MU_EARTH_MOON))
                / (2 * eps)
                for e in np.eye(6)
            ]
        )
        np.testing.assert_allclose(full_jacobian(state, MU_EARTH_MOON), numeric, atol=1e-7)

    def test_jacobi_constant_conserved(self) -> None:
        """Test the Jacobi constant along an integrated trajectory."""
        params = CRTBPParams(MU_EARTH_MOON)
        state = params.libration_state() + np.array([1e-3, 0.0, 5e-4, 0.0, 2e-3, 0.0])
        traj = rk78_integrate(
            lambda _t, y: full_rhs(y, MU_EARTH_MOON), state, 0.0, 2.0, IntegratorConfig(), [1.0, 2.0]
        )
        c0 = jacobi_constant(state, MU_EARTH_MOON)
        for s in traj.states:
            assert jacobi_constant(s, MU_EARTH_MOON) == pytest.approx(c0, abs=1e-10)

    def test_collision_raises(self) -> None:
        """Test evaluating at a primary raises."""
        with pytest.raises(SingularityError):
            full_rhs([-MU_EARTH_MOON, 0.0, 0.0, 0.0, 0.0, 0.0], MU_EARTH_MOON)

    def test_linearization_rates(self, params: CRTBPParams) -> None:
        """Test the Jacobian spectrum is +-lambda, +-i omega1, +-i omega2."""
        lam, w1, w2 = characteristic_rates(cn_coefficients(params)[0])
        eig = np.linalg.eigvals(full_jacobian(params.libration_state(), params.mu))
        expected = np.array([lam, -lam, 1j * w1, -1j * w1, 1j * w2, -1j * w2])
        for value in expected:
            assert np.min(np.abs(eig - value)) < 1e-8


class TestLibrationExpansion:
    """Tests for the polynomial equations around the libration point."""

    def test_legendre_recursion(self) -> None:
        """Test T2 = x^2 - (y^2 + z^2)/2."""
        x, y, z = (Polynomial.variable(3, k) for k in range(3))
        expected = x * x - (y * y + z * z).scale(0.5)
        assert legendre_recursion_Tn(3)[2].allclose(expected)

    def test_polynomial_matches_full_dynamics(self, params: CRTBPParams) -> None:
        """Test the truncated expansion reproduces the scaled full field near the point."""
        eom = polynomial_eom(params)
        s = np.array([5e-3, -4e-3, 3e-3, 2e-3, 1e-3, -2e-3])
        expected = full_rhs(from_libration(s, params), params.mu) / params.gamma
        np.testing.assert_allclose(eom.evaluate(s).real, expected, atol=1e-10)

    def test_truncation_error_shrinks_with_order(self) -> None:
        """Test each added expansion order cuts the field error by about the state size."""
        rng = np.random.default_rng(5)
        directions = rng.normal(size=(100, 6))
        states = 1e-3 * directions / np.linalg.norm(directions, axis=1, keepdims=True)
        errors = []
        for order in (2, 3, 4):
            params = CRTBPParams(MU_EARTH_MOON, "L1", expansion_order=order)
            eom = polynomial_eom(params)
            exact = [full_rhs(from_libration(s, params), params.mu) / params.gamma for s in states]
            errors.append(np.max(np.abs(eom.evaluate(states).real - np.array(exact))))
        for coarse, fine in zip(errors, errors[1:]):
            assert 1e-4 < fine / coarse < 1e-2

    def test_frame_round_trip(self, params: CRTBPParams) -> None:
        """Test conversion to and from the libration frame."""
        state = params.libration_state() + 1e-3
        np.testing.assert_allclose(from_libration(to_libration(state, params), params), state)
        np.testing.assert_allclose(to_libration(params.libration_state(), params), 0.0, atol=1e-14)


class TestNormalForm:
    """Tests for the complex Hamiltonian normal form."""

    def test_rate_identity(self) -> None:
        """Test lambda^2 omega1^2 = 2 c2^2 - c2 - 1."""
        c2 = 5.147
        lam, w1, w2 = characteristic_rates(c2)
        assert lam**2 * w1**2 == pytest.approx(2 * c2**2 - c2 - 1)
        assert w2 == pytest.approx(np.sqrt(c2))

    def test_invalid_regime(self) -> None:
        """Test small c2 has no saddle-center structure."""
        with pytest.raises(InvalidRegimeError):
            characteristic_rates(0.5)

    def test_basis_is_symplectic(self, params: CRTBPParams) -> None:
        """Test T^T J T = J."""
        T = symplectic_basis(params)
        np.testing.assert_allclose(T.T @ SYMPLECTIC @ T, SYMPLECTIC, atol=1e-10)

    def test_linear_part_is_diagonal(self, params: CRTBPParams) -> None:
        """Test the normal-form equations are diagonal to first order."""
        model = hamiltonian_normal_form(params.with_order(3))
        np.testing.assert_allclose(model.eom.linear_part(), np.diag(model.linear_rates), atol=1e-9)

    def test_frame_diagonalizes_full_dynamics(self, params: CRTBPParams) -> None:
        """Test d/dt of the normal coordinates equals rate times coordinate near the point."""
        model = hamiltonian_normal_form(params.with_order(3))
        state = params.libration_state() + 1e-6 * np.array([1.0, -0.5, 0.3, 0.2, 0.7, -0.4])
        v = to_normal(state, model)
        velocity = model.frame.matrix @ full_rhs(state, params.mu)
        np.testing.assert_allclose(velocity, model.linear_rates * v, atol=1e-8)
        assert np.max(np.abs(velocity)) > 1e-6

    def test_normal_round_trip(self, params: CRTBPParams) -> None:
        """Test physical states survive the trip through normal coordinates."""
        model = hamiltonian_normal_form(params.with_order(3))
        state = params.libration_state() + np.array([1e-3, 2e-3, 0.0, -1e-3, 0.0, 5e-4])
        np.testing.assert_allclose(from_normal(to_normal(state, model), model), state, atol=1e-12)
