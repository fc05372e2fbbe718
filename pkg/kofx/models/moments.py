"""Pydantic schemas for central-moment time series."""

from typing import List, Literal, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator


class Tensor(BaseModel):
    """Real tensor flattened in row-major order with its declared shape."""

    shape: List[int] = Field(..., description="Tensor shape")
    values: List[float] = Field(..., description="Row-major values")

    @model_validator(mode="after")
    def check_size(self) -> "Tensor":
        expected = int(np.prod(self.shape)) if self.shape else 1
        if len(self.values) != expected:
            raise ValueError(f"shape {self.shape} needs {expected} values, got {len(self.values)}")
        return self

    @classmethod
    def from_array(cls, array: np.ndarray) -> "Tensor":
        arr = np.asarray(array, dtype=float)
        return cls(shape=list(arr.shape), values=arr.ravel().tolist())

    def to_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float).reshape(self.shape)


class CentralMomentDocument(BaseModel):
    """Central moments of one epoch."""

    t: Union[float, None] = Field(None, description="Epoch (nondimensional time)")
    order: int = Field(..., ge=2, le=4, description="Highest central moment order")
    mean: Tensor
    covariance: Tensor
    skewness: Union[Tensor, None] = None
    kurtosis: Union[Tensor, None] = None


class MomentSeriesDocument(BaseModel):
    """Moment propagation output of the propagate command."""

    format_version: Literal[1] = 1
    scenario: str = Field(..., description="Scenario name")
    psi: int = Field(..., ge=2, le=4)
    epochs: List[CentralMomentDocument] = Field(default_factory=list)
