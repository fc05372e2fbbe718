"""Truth integrator, benchmark filters and the Monte Carlo harness."""

from kofx.reference.dynamics import CRTBPDynamics, Dynamics, LinearDynamics, propagate_with_stm
from kofx.reference.filters import (
    METHODS,
    BenchmarkTuning,
    compute_filter_weights,
    ekf_step,
    ikf_step,
    run_benchmark,
    sigma_points,
    ukf_step,
    unscented_transform,
)
from kofx.reference.integrator import IntegratorConfig, Trajectory, rk78_integrate, rk78_step
from kofx.reference.montecarlo import (
    TruthSetup,
    monte_carlo,
    run_rng,
    sample_moments,
    simulate,
)
from kofx.reference.statistics import MCReport, SampleMoments, spread_statistics

__all__ = [
    "METHODS",
    "BenchmarkTuning",
    "CRTBPDynamics",
    "Dynamics",
    "IntegratorConfig",
    "LinearDynamics",
    "MCReport",
    "SampleMoments",
    "Trajectory",
    "TruthSetup",
    "compute_filter_weights",
    "ekf_step",
    "ikf_step",
    "monte_carlo",
    "propagate_with_stm",
    "rk78_integrate",
    "rk78_step",
    "run_benchmark",
    "run_rng",
    "sample_moments",
    "sigma_points",
    "simulate",
    "spread_statistics",
    "ukf_step",
    "unscented_transform",
]
