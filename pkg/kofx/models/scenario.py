"""Scenario files and the built-in presets."""

import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from kofx.core.exceptions import InputFileError, ScenarioError

logger = logging.getLogger(__name__)

EPOCH_DECIMALS = 12


class MeasurementSpec(BaseModel):
    """Sensor attached to a scenario."""

    kind: Literal["azimuth-elevation", "linear"] = Field(..., description="Measurement function")
    sigma_arcsec: float = Field(default=10.0, gt=0, description="Angle noise std (azimuth-elevation)")
    matrix: Union[List[List[float]], None] = Field(None, description="H for linear measurements")
    noise_sigma: Union[List[float], None] = Field(None, description="Per-channel noise std (linear)")
    taylor_order: Union[int, None] = Field(None, ge=1, le=6, description="Overrides the filter setting")

    @model_validator(mode="after")
    def check_linear(self) -> "MeasurementSpec":
        if self.kind == "linear":
            if not self.matrix or not self.noise_sigma:
                raise ValueError("linear measurements need 'matrix' and 'noise_sigma'")
            if len(self.noise_sigma) != len(self.matrix):
                raise ValueError("'noise_sigma' needs one entry per measurement row")
            if any(s <= 0 for s in self.noise_sigma):
                raise ValueError("'noise_sigma' entries must be positive")
        return self


class ModelSpec(BaseModel):
    """How the Koopman model of a scenario is built."""

    max_degree: int = Field(default=3, ge=1, le=8, description="Basis total degree")
    frame: Literal["normal", "libration", "identity"] = Field(
        default="normal", description="Coordinates the model is built in"
    )
    domain_scale: float = Field(default=1.2, ge=1.0, description="Multiplier on the trajectory extent")
    domain_margin: float = Field(default=5.0, ge=0, description="Initial sigmas added to the extent")
    domain_floor: float = Field(default=1e-3, gt=0, description="Smallest domain half-width")
    domain_half_widths: Union[List[float], None] = Field(
        None, description="Explicit half-widths in model coordinates (skips the automatic box)"
    )


class Scenario(BaseModel):
    """Dynamics, initial belief, timeline and sensor of one experiment."""

    name: str = Field(..., min_length=1, description="Scenario name")
    system: Literal["crtbp", "linear"] = Field(..., description="Dynamics family")
    mu: Union[float, None] = Field(None, gt=0, lt=0.5, description="CRTBP mass ratio")
    point: Literal["L1", "L2"] = Field(default="L1", description="Libration point")
    expansion_order: int = Field(default=4, ge=2, le=8, description="Legendre expansion order N")
    dynamics_matrix: Union[List[List[float]], None] = Field(None, description="M of dx/dt = M x")
    initial_mean: List[float] = Field(..., min_length=1, description="Initial state mean")
    initial_sigma: Union[float, List[float]] = Field(..., description="Initial per-axis std")
    t0: float = Field(default=0.0, description="Initial epoch")
    t_final: float = Field(..., description="Final epoch")
    output_step: float = Field(default=0.2, gt=0, description="Spacing of report epochs")
    cadence: Union[float, None] = Field(None, gt=0, description="Measurement spacing")
    measurement: Union[MeasurementSpec, None] = None
    model: ModelSpec = Field(default_factory=ModelSpec)

    @field_validator("initial_sigma")
    @classmethod
    def validate_sigma(cls, v: Union[float, List[float]]) -> Union[float, List[float]]:
        values = v if isinstance(v, list) else [v]
        if any(s <= 0 for s in values):
            raise ValueError("initial_sigma must be positive")
        return v

    @model_validator(mode="after")
    def check_consistency(self) -> "Scenario":
        d = len(self.initial_mean)
        if self.t_final <= self.t0:
            raise ValueError("t_final must be after t0")
        if isinstance(self.initial_sigma, list) and len(self.initial_sigma) != d:
            raise ValueError(f"initial_sigma needs {d} entries")
        if self.system == "crtbp":
            if self.mu is None:
                raise ValueError("crtbp scenarios need 'mu'")
            if d != 6:
                raise ValueError("crtbp scenarios have a 6-dimensional state")
        else:
            m = self.dynamics_matrix
            if m is None or len(m) != d or any(len(row) != d for row in m):
                raise ValueError(f"linear scenarios need a {d}x{d} 'dynamics_matrix'")
            # linear models are built in the physical coordinates
            if self.model.frame != "identity":
                self.model = self.model.model_copy(update={"frame": "identity"})
        if self.cadence is not None and self.measurement is None:
            raise ValueError("'cadence' requires a 'measurement'")
        if self.measurement is not None and self.measurement.kind == "linear":
            if any(len(row) != d for row in self.measurement.matrix or []):
                raise ValueError(f"measurement matrix rows need {d} entries")
        if self.measurement is not None and self.measurement.kind == "azimuth-elevation":
            if self.system != "crtbp":
                raise ValueError("azimuth-elevation measurements need a crtbp scenario")
        return self

    @property
    def dim(self) -> int:
        return len(self.initial_mean)

    def initial_covariance(self) -> Any:
        sigma = np.broadcast_to(np.asarray(self.initial_sigma, dtype=float), (self.dim,))
        return np.diag(sigma**2)

    def _grid(self, step: float, include_start: bool) -> List[float]:
        count = int(np.floor((self.t_final - self.t0) / step + 1e-9))
        start = 0 if include_start else 1
        return [round(self.t0 + k * step, EPOCH_DECIMALS) for k in range(start, count + 1)]

    def output_epochs(self) -> List[float]:
        """``t0, t0 + step, ...`` up to ``t_final``."""
        return self._grid(self.output_step, include_start=True)

    def measurement_epochs(self) -> List[float]:
        """Observation epochs ``t0 + k * cadence`` for ``k >= 1``; empty without a cadence."""
        if self.cadence is None:
            return []
        return self._grid(self.cadence, include_start=False)

    def report_epochs(self) -> List[float]:
        return sorted(set(self.output_epochs()) | set(self.measurement_epochs()))

    def with_overrides(self, **updates: Any) -> "Scenario":
        """Copy with top-level fields replaced and re-validated."""
        data = self.model_dump()
        data.update({k: v for k, v in updates.items() if v is not None})
        return Scenario.model_validate(data)


PRESETS: Dict[str, Dict[str, Any]] = {
    "earth-moon-L1-halo": {
        "name": "earth-moon-L1-halo",
        "system": "crtbp",
        "mu": 0.012153281419431,
        "point": "L1",
        "expansion_order": 4,
        "initial_mean": [0.823376807050253, 0.0, 0.001386166961157, 0.0, 0.126366690232230, 0.0],
        "initial_sigma": 1e-4,
        "t_final": 2.0,
        "output_step": 0.2,
        "model": {"max_degree": 3, "frame": "normal"},
    },
    "sun-earth-L1-lyapunov": {
        "name": "sun-earth-L1-lyapunov",
        "system": "crtbp",
        "mu": 3.003410642560030e-06,
        "point": "L1",
        "expansion_order": 4,
        "initial_mean": [0.989826595322, 0.0, 0.0, 0.0, 0.00137295958289, 0.0],
        "initial_sigma": 1e-4,
        "t_final": 4.0,
        "output_step": 0.4,
        "cadence": 0.4,
        "measurement": {"kind": "azimuth-elevation", "sigma_arcsec": 10.0},
        "model": {"max_degree": 3, "frame": "normal"},
    },
    "linear-damped-oscillator": {
        "name": "linear-damped-oscillator",
        "system": "linear",
        "dynamics_matrix": [[0.0, 1.0], [-1.0, -0.2]],
        "initial_mean": [1.0, 0.0],
        "initial_sigma": 0.1,
        "t_final": 5.0,
        "output_step": 0.5,
        "cadence": 0.5,
        "measurement": {"kind": "linear", "matrix": [[1.0, 0.0]], "noise_sigma": [0.05]},
        "model": {"max_degree": 2, "frame": "identity"},
    },
}


def preset_names() -> List[str]:
    return sorted(PRESETS)


def _read_document(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text()
    except OSError as e:
        raise InputFileError(str(path), e.strerror or str(e)) from e
    try:
        if path.suffix == ".toml":
            return tomllib.loads(text)
        if path.suffix == ".json":
            return dict(json.loads(text))
        return dict(yaml.safe_load(text) or {})
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, yaml.YAMLError, TypeError, ValueError) as e:
        raise InputFileError(str(path), f"not a valid scenario document ({e})") from e


def load_scenario(reference: Union[str, Path]) -> Scenario:
    """Resolve a preset name or read a TOML, JSON or YAML scenario file."""
    key = str(reference)
    if key in PRESETS:
        data = PRESETS[key]
    else:
        path = Path(reference)
        if not path.suffix and not path.exists():
            raise ScenarioError(
                f"Unknown scenario '{key}'; presets are {', '.join(preset_names())}"
            )
        data = _read_document(path)
        data.setdefault("name", path.stem)
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"Invalid scenario '{key}': {e}") from e
    logger.debug(f"Loaded scenario {scenario.name} ({scenario.system}, d={scenario.dim})")
    return scenario
