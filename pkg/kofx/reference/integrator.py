"""Embedded Runge-Kutta-Fehlberg 7(8) integrator with adaptive steps."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, NamedTuple, Sequence, Union

import numpy as np

from kofx.core.config import IntegratorSettings
from kofx.core.exceptions import ContractViolation, StepUnderflowError

logger = logging.getLogger(__name__)

RHS = Callable[[float, Any], Any]


def _f(*values: Union[int, str]) -> list[float]:
    return [float(Fraction(v)) for v in values]


# Fehlberg 7(8) tableau; the 8th-order solution is propagated.
NODES = np.array(_f(0, "2/27", "1/9", "1/6", "5/12", "1/2", "5/6", "1/6", "2/3", "1/3", 1, 0, 1))
COUPLING = [
    [],
    _f("2/27"),
    _f("1/36", "1/12"),
    _f("1/24", 0, "1/8"),
    _f("5/12", 0, "-25/16", "25/16"),
    _f("1/20", 0, 0, "1/4", "1/5"),
    _f("-25/108", 0, 0, "125/108", "-65/27", "125/54"),
    _f("31/300", 0, 0, 0, "61/225", "-2/9", "13/900"),
    _f(2, 0, 0, "-53/6", "704/45", "-107/9", "67/90", 3),
    _f("-91/108", 0, 0, "23/108", "-976/135", "311/54", "-19/60", "17/6", "-1/12"),
    _f("2383/4100", 0, 0, "-341/164", "4496/1025", "-301/82", "2133/4100", "45/82", "45/164", "18/41"),
    _f("3/205", 0, 0, 0, 0, "-6/41", "-3/205", "-3/41", "3/41", "6/41", 0),
    _f("-1777/4100", 0, 0, "-341/164", "4496/1025", "-289/82", "2193/4100", "51/82", "33/164", "12/41", 0, 1),
]
WEIGHTS = np.array(_f(0, 0, 0, 0, 0, "34/105", "9/35", "9/35", "9/280", "9/280", 0, "41/840", "41/840"))
ERROR_WEIGHT = 41.0 / 840.0
ORDER = 8


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step limits of the truth integrator."""

    rtol: float = 1e-12
    atol: float = 1e-12
    max_step: float = 0.5
    min_step: float = 1e-12
    safety: float = 0.9
    initial_step: Union[float, None] = None

    def __post_init__(self) -> None:
        for name in ("rtol", "atol", "max_step", "min_step", "safety"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"Integrator {name} must be positive")
        if self.initial_step is not None and self.initial_step <= 0:
            raise ContractViolation("Integrator initial_step must be positive")

    @classmethod
    def from_settings(cls, settings: IntegratorSettings) -> IntegratorConfig:
        return cls(
            rtol=settings.rtol,
            atol=settings.atol,
            max_step=settings.max_step,
            min_step=settings.min_step,
            safety=settings.safety,
        )


class Trajectory(NamedTuple):
    """States at the requested epochs."""

    times: Any
    states: Any
    steps: int
    rejected: int

    @property
    def final(self) -> Any:
        return self.states[-1]


def rk78_step(rhs: RHS, t: float, y: Any, h: float) -> tuple[Any, Any]:
    """One step: 8th-order solution and the embedded error estimate."""
    k = [rhs(t, y)]
    for stage in range(1, 13):
        incr = sum((a * k[j] for j, a in enumerate(COUPLING[stage]) if a != 0.0), start=np.zeros_like(y))
        k.append(rhs(t + NODES[stage] * h, y + h * incr))
    y_new = y + h * sum((w * k[j] for j, w in enumerate(WEIGHTS) if w != 0.0), start=np.zeros_like(y))
    error = h * ERROR_WEIGHT * (k[0] + k[10] - k[11] - k[12])
    return y_new, error


def _error_norm(error: Any, y: Any, y_new: Any, config: IntegratorConfig) -> float:
    scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.max(np.abs(error) / scale))


def rk78_integrate(
    rhs: RHS,
    state: Any,
    t0: float,
    t1: float,
    config: Union[IntegratorConfig, None] = None,
    t_eval: Union[Sequence[float], None] = None,
) -> Trajectory:
    """Integrate ``dy/dt = rhs(t, y)`` from t0 to t1.

    Steps are shortened to land exactly on every requested epoch, so the
    returned states are step-end values. ``t_eval`` defaults to ``[t1]`` and
    must lie between t0 and t1 in integration order.
    """
    config = config or IntegratorConfig()
    y = np.array(state, dtype=np.result_type(np.asarray(state).dtype, float))
    span = t1 - t0
    epochs = np.asarray([t1] if t_eval is None else t_eval, dtype=float)
    direction = 1.0 if span >= 0 else -1.0
    if np.any(np.diff(epochs) * direction < 0) or np.any((epochs - t0) * direction < 0):
        raise ContractViolation("Requested epochs must be ordered along the integration direction")

    times: list[float] = []
    states: list[Any] = []
    t = float(t0)
    h = config.initial_step or min(config.max_step, max(abs(span) * 1e-2, config.min_step))
    steps = rejected = 0

    for target in epochs:
        while (target - t) * direction > 0:
            remaining = abs(target - t)
            h_try = min(h, remaining, config.max_step)
            y_new, error = rk78_step(rhs, t, y, direction * h_try)
            err = _error_norm(error, y, y_new, config)
            if err <= 1.0:
                t = float(target) if h_try == remaining else t + direction * h_try
                y = y_new
                steps += 1
                factor = 5.0 if err == 0.0 else min(5.0, max(0.2, config.safety * err ** (-1.0 / ORDER)))
                # a step clipped to hit an epoch does not shrink the proposal
                h = min(max(h, h_try * factor) if h_try < h else h_try * factor, config.max_step)
            else:
                rejected += 1
                factor = config.safety * err ** (-1.0 / ORDER) if np.isfinite(err) else 0.2
                h = h_try * min(1.0, max(0.2, factor))
                if h < config.min_step:
                    raise StepUnderflowError(t, h)
        times.append(float(target))
        states.append(y.copy())

    logger.debug(f"RK78 {t0:.6g} -> {t1:.6g}: {steps} steps, {rejected} rejected")
    return Trajectory(np.array(times), np.array(states), steps, rejected)
