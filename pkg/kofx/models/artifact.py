"""Pydantic schemas for the serialized Koopman model artifact."""

from typing import Any, Dict, List, Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

ARTIFACT_FORMAT_VERSION = 1


class ComplexArray(BaseModel):
    """Complex array stored as flattened row-major real and imaginary parts."""

    shape: List[int] = Field(..., description="Array shape")
    re: List[float] = Field(..., description="Real parts, row-major")
    im: List[float] = Field(..., description="Imaginary parts, row-major")

    @model_validator(mode="after")
    def check_size(self) -> "ComplexArray":
        size = int(np.prod(self.shape)) if self.shape else 1
        if len(self.re) != size or len(self.im) != size:
            raise ValueError(f"shape {self.shape} needs {size} entries")
        return self

    @classmethod
    def from_array(cls, array: Any) -> "ComplexArray":
        arr = np.asarray(array, dtype=complex)
        flat = arr.ravel()
        return cls(shape=list(arr.shape), re=flat.real.tolist(), im=flat.imag.tolist())

    def to_array(self) -> Any:
        return (np.array(self.re) + 1j * np.array(self.im)).reshape(self.shape)


class BasisDescriptor(BaseModel):
    """Domain box and degree that regenerate the Legendre basis."""

    lower: List[float] = Field(..., description="Domain lower bounds")
    upper: List[float] = Field(..., description="Domain upper bounds")
    max_degree: int = Field(..., ge=0, description="Maximum total degree")


class FrameDescriptor(BaseModel):
    """Affine map from physical to model coordinates."""

    matrix: ComplexArray
    offset: ComplexArray


class KoopmanArtifact(BaseModel):
    """Versioned, self-describing Koopman model."""

    format_version: Literal[1] = Field(ARTIFACT_FORMAT_VERSION, description="Artifact schema version")
    tool_version: str = Field(..., description="Version of the writing toolkit")
    basis: BasisDescriptor
    frame: FrameDescriptor
    koopman_matrix: ComplexArray
    eigenvectors: ComplexArray
    eigenvalues: ComplexArray
    condition_number: float = Field(..., description="Condition number of the eigenvector matrix")
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Scenario and build parameters")
