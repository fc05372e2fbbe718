"""Gaussian moment engine."""

from kofx.moments.isserlis import (
    DEFAULT_ORDER_CAP,
    IsserlisTable,
    check_covariance,
    expect_polynomial,
    isserlis_moment,
)
from kofx.moments.propagation import (
    CentralMomentSet,
    GaussianBelief,
    MomentEngine,
    gaussian_kurtosis,
    gaussian_moment_set,
    propagate_moments,
)

__all__ = [
    "DEFAULT_ORDER_CAP",
    "CentralMomentSet",
    "GaussianBelief",
    "IsserlisTable",
    "MomentEngine",
    "check_covariance",
    "expect_polynomial",
    "gaussian_kurtosis",
    "gaussian_moment_set",
    "isserlis_moment",
    "propagate_moments",
]
