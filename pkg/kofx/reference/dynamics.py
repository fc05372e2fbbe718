"""Truth dynamics used by the benchmark filters and the Monte Carlo harness."""

from __future__ import annotations

import logging
from typing import Any, Callable, Protocol, Sequence, Tuple, Union, runtime_checkable

import numpy as np
import scipy.linalg

from kofx.core.exceptions import ContractViolation
from kofx.crtbp.dynamics import full_jacobian, full_rhs
from kofx.reference.integrator import IntegratorConfig, rk78_integrate

logger = logging.getLogger(__name__)


@runtime_checkable
class Dynamics(Protocol):
    """Deterministic state propagation with an optional state-transition matrix."""

    dim: int

    def propagate(self, state: Any, t0: float, t1: float) -> Any: ...

    def propagate_with_stm(self, state: Any, t0: float, t1: float) -> Tuple[Any, Any]: ...

    def trajectory(self, state: Any, t0: float, epochs: Sequence[float]) -> Any: ...


def propagate_with_stm(
    rhs: Callable[[Any], Any],
    jacobian: Callable[[Any], Any],
    state: Any,
    t0: float,
    t1: float,
    config: Union[IntegratorConfig, None] = None,
) -> Tuple[Any, Any]:
    """Integrate the state together with ``dPhi/dt = J(x) Phi`` from ``Phi(t0) = I``."""
    x0 = np.asarray(state, dtype=float)
    d = x0.size

    def augmented(_t: float, y: Any) -> Any:
        x = y[:d]
        phi = y[d:].reshape(d, d)
        return np.concatenate([rhs(x), (jacobian(x) @ phi).ravel()])

    y0 = np.concatenate([x0, np.eye(d).ravel()])
    final = rk78_integrate(augmented, y0, t0, t1, config).final
    return final[:d], final[d:].reshape(d, d)


class LinearDynamics:
    """``dx/dt = M x`` propagated with the exact matrix exponential."""

    def __init__(self, matrix: Any) -> None:
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ContractViolation(f"Dynamics matrix must be square, got shape {mat.shape}")
        self.matrix = mat
        self.dim = mat.shape[0]

    def transition(self, dt: float) -> Any:
        return scipy.linalg.expm(self.matrix * dt)

    def propagate(self, state: Any, t0: float, t1: float) -> Any:
        return self.transition(t1 - t0) @ np.asarray(state, dtype=float)

    def propagate_with_stm(self, state: Any, t0: float, t1: float) -> Tuple[Any, Any]:
        phi = self.transition(t1 - t0)
        return phi @ np.asarray(state, dtype=float), phi

    def trajectory(self, state: Any, t0: float, epochs: Sequence[float]) -> Any:
        x0 = np.asarray(state, dtype=float)
        return np.array([self.transition(t - t0) @ x0 for t in epochs])


class CRTBPDynamics:
    """Full nonlinear CRTBP integrated with RK78."""

    dim = 6

    def __init__(self, mu: float, config: Union[IntegratorConfig, None] = None) -> None:
        self.mu = mu
        self.config = config or IntegratorConfig()

    def rhs(self, state: Any) -> Any:
        return full_rhs(state, self.mu)

    def jacobian(self, state: Any) -> Any:
        return full_jacobian(state, self.mu)

    def propagate(self, state: Any, t0: float, t1: float) -> Any:
        if t1 == t0:
            return np.asarray(state, dtype=float).copy()
        return rk78_integrate(lambda _t, y: self.rhs(y), state, t0, t1, self.config).final

    def propagate_with_stm(self, state: Any, t0: float, t1: float) -> Tuple[Any, Any]:
        if t1 == t0:
            return np.asarray(state, dtype=float).copy(), np.eye(6)
        return propagate_with_stm(self.rhs, self.jacobian, state, t0, t1, self.config)

    def trajectory(self, state: Any, t0: float, epochs: Sequence[float]) -> Any:
        """States at ``epochs`` (an epoch equal to t0 returns the initial state)."""
        epochs = np.asarray(epochs, dtype=float)
        later = epochs[epochs > t0]
        out = [np.asarray(state, dtype=float).copy() for _ in epochs[epochs <= t0]]
        if later.size:
            traj = rk78_integrate(lambda _t, y: self.rhs(y), state, t0, float(later[-1]), self.config, later)
            out.extend(traj.states)
        return np.array(out)
