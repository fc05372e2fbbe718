"""Toolkit configuration using pydantic-settings."""

import logging
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

DEFAULT_CONFIG_FILE = "kofx.yaml"


class NumericsConfig(BaseSettings):
    """Tolerances shared by the polynomial and spectral layers."""

    model_config = SettingsConfigDict(env_prefix="KOFX_NUMERICS_", extra="ignore")

    cleanup_threshold: float = Field(
        default=1e-14, gt=0, lt=1e-6, description="Relative magnitude below which coefficients are dropped"
    )
    imag_tolerance: float = Field(
        default=1e-8, gt=0, description="Relative imaginary residual accepted on real outputs"
    )
    eigvec_cond_limit: float = Field(
        default=1e12, gt=1, description="Eigenvector condition number treated as defective"
    )
    inverse_cond_limit: float = Field(
        default=1e10, gt=1, description="Condition number above which C is never inverted"
    )
    exp_overflow_limit: float = Field(
        default=700.0, gt=0, le=709.0, description="Largest Re(lambda)*t accepted by exp"
    )


class MomentsConfig(BaseSettings):
    """Moment engine configuration."""

    model_config = SettingsConfigDict(env_prefix="KOFX_MOMENTS_", extra="ignore")

    order_cap: int = Field(default=16, ge=2, le=32, description="Isserlis order cap for pipelines")
    default_psi: int = Field(default=4, ge=2, le=4, description="Default central moment order")


class FilterSettings(BaseSettings):
    """Koopman operator filter and benchmark filter tuning."""

    model_config = SettingsConfigDict(env_prefix="KOFX_FILTER_", extra="ignore")

    taylor_order: int = Field(default=2, ge=1, le=6, description="Measurement Taylor order")
    recenter: bool = Field(default=True, description="Re-center the shifted basis at updates")
    eig_floor: float = Field(
        default=1e-10, ge=0, description="Negative eigenvalues above -eig_floor*trace are clipped"
    )
    ikf_iterations: int = Field(default=5, ge=1, description="IKF Gauss-Newton iterations")
    ikf_tolerance: float = Field(default=1e-10, gt=0, description="IKF step-norm stop")


class UKFConfig(BaseSettings):
    """Unscented transform parameters."""

    model_config = SettingsConfigDict(env_prefix="KOFX_UKF_", extra="ignore")

    alpha: float = Field(default=1e-3, gt=0, le=1, description="Sigma point spread")
    beta: float = Field(default=2.0, ge=0, description="Prior distribution knowledge")
    kappa: float = Field(default=0.0, description="Secondary scaling")


class IntegratorSettings(BaseSettings):
    """Truth integrator defaults."""

    model_config = SettingsConfigDict(env_prefix="KOFX_INTEGRATOR_", extra="ignore")

    rtol: float = Field(default=1e-12, gt=0, description="Relative tolerance")
    atol: float = Field(default=1e-12, gt=0, description="Absolute tolerance")
    max_step: float = Field(default=0.5, gt=0, description="Largest step")
    min_step: float = Field(default=1e-12, gt=0, description="Step underflow threshold")
    safety: float = Field(default=0.9, gt=0, lt=1, description="Step-size safety factor")


class MonteCarloConfig(BaseSettings):
    """Monte Carlo harness configuration."""

    model_config = SettingsConfigDict(env_prefix="KOFX_MONTECARLO_", extra="ignore")

    workers: int = Field(default=1, ge=1, le=64, description="Concurrent runs")
    runs: int = Field(default=50, ge=1, description="Default number of runs")
    seed: int = Field(default=0, ge=0, description="Default base seed")


class LoggingConfig(BaseSettings):
    """Logging configuration."""

    model_config = SettingsConfigDict(env_prefix="KOFX_LOGGING_", extra="ignore")

    level: str = Field(default="info", description="Default logging level")
    format: str = Field(default="text", description="Log format (json or text)")
    config_file: str = Field(default="logging.yaml", description="dictConfig YAML file")
    journal_file: Union[str, None] = Field(None, description="Run journal file (disabled if unset)")

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate logging level."""
        valid_levels = ["debug", "info", "warning", "error", "critical"]
        if v.lower() not in valid_levels:
            raise ValueError(f"level must be one of {valid_levels}")
        return v.lower()

    @field_validator("format")
    @classmethod
    def validate_format(cls, v: str) -> str:
        """Validate log format."""
        if v.lower() not in ["json", "text"]:
            raise ValueError("format must be 'json' or 'text'")
        return v.lower()


class OutputConfig(BaseSettings):
    """Output locations."""

    model_config = SettingsConfigDict(env_prefix="KOFX_OUTPUT_", extra="ignore")

    directory: str = Field(default="./output", description="Default output directory")
    float_format: str = Field(default="%.17g", description="CSV float format")


class Settings(BaseSettings):
    """Toolkit settings."""

    model_config = SettingsConfigDict(
        env_prefix="KOFX_",
        env_nested_delimiter="__",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Sub-configurations
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    moments: MomentsConfig = Field(default_factory=MomentsConfig)
    filter: FilterSettings = Field(default_factory=FilterSettings)
    ukf: UKFConfig = Field(default_factory=UKFConfig)
    integrator: IntegratorSettings = Field(default_factory=IntegratorSettings)
    montecarlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @classmethod
    def load_from_yaml(cls, config_path: Union[str, Path]) -> "Settings":
        """Load settings from YAML file.

        Args:
            config_path: Path to YAML configuration file

        Returns:
            Settings instance with values from YAML and environment

        Raises:
            yaml.YAMLError: If YAML parsing fails
        """
        config_path = Path(config_path)

        if not config_path.exists():
            logging.warning(f"Config file not found: {config_path}, using defaults")
            return cls()

        try:
            with open(config_path) as f:
                config_data = yaml.safe_load(f) or {}
            return cls(**config_data)
        except yaml.YAMLError as e:
            logging.error(f"Failed to parse YAML config: {e}")
            raise

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary.

        Returns:
            Dictionary representation of settings
        """
        return self.model_dump()


# Global settings instance
_settings: Union[Settings, None] = None


def get_settings() -> Settings:
    """Get toolkit settings singleton.

    Returns:
        Settings instance
    """
    global _settings

    if _settings is None:
        config_file = Path(DEFAULT_CONFIG_FILE)
        if config_file.exists():
            _settings = Settings.load_from_yaml(config_file)
        else:
            _settings = Settings()

    return _settings


def reload_settings(config_path: Union[str, Path, None] = None) -> Settings:
    """Reload settings from configuration file.

    Args:
        config_path: Path to configuration file (optional)

    Returns:
        Reloaded Settings instance
    """
    global _settings

    if config_path:
        _settings = Settings.load_from_yaml(config_path)
    else:
        _settings = None
        _settings = get_settings()

    return _settings
