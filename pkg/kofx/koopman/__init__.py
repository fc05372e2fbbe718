"""Koopman matrix assembly, spectral decomposition and analytical flows."""

from kofx.koopman.flow import flow_coefficients, flow_polynomial, physical_flow, shifted_flow
from kofx.koopman.frame import AffineFrame
from kofx.koopman.model import (
    KoopmanModel,
    ObservableSet,
    SpectralDecomposition,
    VectorField,
    build_koopman_matrix,
    build_model,
    eigendecompose,
    identity_observables,
    koopman_modes,
)
from kofx.koopman.serialization import artifact_to_model, load_model, model_to_artifact, save_model

__all__ = [
    "AffineFrame",
    "KoopmanModel",
    "ObservableSet",
    "SpectralDecomposition",
    "VectorField",
    "artifact_to_model",
    "build_koopman_matrix",
    "build_model",
    "eigendecompose",
    "flow_coefficients",
    "flow_polynomial",
    "identity_observables",
    "koopman_modes",
    "load_model",
    "model_to_artifact",
    "physical_flow",
    "save_model",
    "shifted_flow",
]
