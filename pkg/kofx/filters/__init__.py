"""Koopman operator filter and its measurement models."""

from kofx.filters.kof import (
    FilterConfig,
    Prediction,
    Update,
    measurement_polynomial,
    predict,
    run_filter,
    update,
)
from kofx.filters.measurement import ARCSEC, AzimuthElevation, LinearMeasurement, MeasurementModel
from kofx.filters.state import FilterRecord, FilterState, Observation, floor_covariance, symmetrize

__all__ = [
    "ARCSEC",
    "AzimuthElevation",
    "FilterConfig",
    "FilterRecord",
    "FilterState",
    "LinearMeasurement",
    "MeasurementModel",
    "Observation",
    "Prediction",
    "Update",
    "floor_covariance",
    "measurement_polynomial",
    "predict",
    "run_filter",
    "symmetrize",
    "update",
]
