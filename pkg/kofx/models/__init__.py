"""Pydantic schemas for artifacts, scenarios, moment documents and manifests."""

from kofx.models.artifact import (
    ARTIFACT_FORMAT_VERSION,
    BasisDescriptor,
    ComplexArray,
    FrameDescriptor,
    KoopmanArtifact,
)
from kofx.models.manifest import MANIFEST_FILE, RunManifest
from kofx.models.moments import CentralMomentDocument, MomentSeriesDocument, Tensor
from kofx.models.scenario import (
    PRESETS,
    MeasurementSpec,
    ModelSpec,
    Scenario,
    load_scenario,
    preset_names,
)

__all__ = [
    "ARTIFACT_FORMAT_VERSION",
    "MANIFEST_FILE",
    "PRESETS",
    "BasisDescriptor",
    "CentralMomentDocument",
    "ComplexArray",
    "FrameDescriptor",
    "KoopmanArtifact",
    "MeasurementSpec",
    "ModelSpec",
    "MomentSeriesDocument",
    "RunManifest",
    "Scenario",
    "Tensor",
    "load_scenario",
    "preset_names",
]
