"""Tests for settings, logging setup and the run journal."""

import json
import logging
import os

import pytest
import yaml
from pydantic import ValidationError

from kofx.core import config
from kofx.core.config import Settings, UKFConfig, get_settings, reload_settings
from kofx.core.logging import RunJournal, setup_logging


@pytest.fixture(autouse=True)
def clean_environment(tmp_path, monkeypatch):
    """Run without KOFX_ variables, .env files or a cached singleton."""
    for name in list(os.environ):
        if name.startswith("KOFX_"):
            monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr(config, "_settings", None)
    kofx_logger = logging.getLogger("kofx")
    level, propagate = kofx_logger.level, kofx_logger.propagate
    yield tmp_path
    kofx_logger.setLevel(level)
    kofx_logger.propagate = propagate


class TestSettings:
    """Tests for the settings model."""

    def test_defaults(self) -> None:
        """Test the default values."""
        settings = Settings()
        assert settings.moments.order_cap == 16
        assert settings.moments.default_psi == 4
        assert settings.ukf.alpha == 1e-3
        assert settings.ukf.beta == 2.0
        assert settings.montecarlo.workers == 1
        assert settings.montecarlo.runs == 50
        assert settings.logging.level == "info"
        assert settings.logging.journal_file is None
        assert settings.output.float_format == "%.17g"

    def test_nested_environment_override(self, monkeypatch) -> None:
        """Test KOFX_<SECTION>__<FIELD> variables."""
        monkeypatch.setenv("KOFX_MONTECARLO__WORKERS", "4")
        assert Settings().montecarlo.workers == 4

    def test_section_environment_override(self, monkeypatch) -> None:
        """Test the per-section prefixes."""
        monkeypatch.setenv("KOFX_UKF_ALPHA", "0.5")
        assert UKFConfig().alpha == 0.5
        assert Settings().ukf.alpha == 0.5

    def test_invalid_level(self) -> None:
        """Test unknown logging levels are rejected."""
        with pytest.raises(ValidationError):
            Settings(logging={"level": "loud"})

    def test_level_is_normalized(self) -> None:
        """Test levels are stored lower-case."""
        assert Settings(logging={"level": "DEBUG"}).logging.level == "debug"

    def test_range_checks(self) -> None:
        """Test out-of-range values are rejected."""
        with pytest.raises(ValidationError):
            Settings(moments={"default_psi": 5})
        with pytest.raises(ValidationError):
            Settings(montecarlo={"workers": 0})


class TestLoading:
    """Tests for YAML settings files and the singleton."""

    def test_load_from_yaml(self, clean_environment) -> None:
        """Test values from a YAML file."""
        path = clean_environment / "settings.yaml"
        path.write_text(yaml.safe_dump({"montecarlo": {"runs": 7}, "filter": {"recenter": False}}))
        settings = Settings.load_from_yaml(path)
        assert settings.montecarlo.runs == 7
        assert settings.filter.recenter is False
        assert settings.moments.order_cap == 16

    def test_missing_file_gives_defaults(self, clean_environment) -> None:
        """Test a missing file falls back to the defaults."""
        settings = Settings.load_from_yaml(clean_environment / "absent.yaml")
        assert settings.montecarlo.runs == 50

    def test_malformed_yaml(self, clean_environment) -> None:
        """Test YAML syntax errors propagate."""
        path = clean_environment / "broken.yaml"
        path.write_text("montecarlo: [runs\n")
        with pytest.raises(yaml.YAMLError):
            Settings.load_from_yaml(path)

    def test_singleton_reads_working_directory_file(self, clean_environment) -> None:
        """Test get_settings picks up ./kofx.yaml once."""
        (clean_environment / "kofx.yaml").write_text("montecarlo:\n  seed: 12\n")
        settings = get_settings()
        assert settings.montecarlo.seed == 12
        assert get_settings() is settings

    def test_reload(self, clean_environment) -> None:
        """Test reload_settings replaces the singleton."""
        first = get_settings()
        path = clean_environment / "other.yaml"
        path.write_text("output:\n  directory: results\n")
        reloaded = reload_settings(path)
        assert reloaded is not first
        assert get_settings().output.directory == "results"


class TestLoggingSetup:
    """Tests for logging configuration."""

    def test_fallback_sets_level(self) -> None:
        """Test a missing dictConfig file still applies the level."""
        settings = Settings(logging={"level": "warning", "config_file": "absent.yaml"})
        setup_logging(settings)
        assert logging.getLogger("kofx").level == logging.WARNING

    def test_dict_config_file(self, clean_environment) -> None:
        """Test a dictConfig file is applied and its log directory created."""
        log_file = clean_environment / "logs" / "kofx-test.log"
        document = {
            "version": 1,
            "disable_existing_loggers": False,
            "handlers": {"file": {"class": "logging.FileHandler", "filename": str(log_file)}},
            "loggers": {"kofx.config_test": {"level": "DEBUG", "handlers": ["file"]}},
        }
        path = clean_environment / "logging.yaml"
        path.write_text(yaml.safe_dump(document))
        setup_logging(Settings(logging={"config_file": str(path)}))
        test_logger = logging.getLogger("kofx.config_test")
        try:
            assert test_logger.level == logging.DEBUG
            assert log_file.parent.is_dir()
        finally:
            for handler in list(test_logger.handlers):
                handler.close()
                test_logger.removeHandler(handler)

    def test_invalid_dict_config_falls_back(self, clean_environment) -> None:
        """Test an unusable dictConfig file does not abort the setup."""
        path = clean_environment / "logging.yaml"
        path.write_text("version: 99\n")
        setup_logging(Settings(logging={"config_file": str(path), "level": "error"}))
        assert logging.getLogger("kofx").level == logging.ERROR


class TestRunJournal:
    """Tests for the command journal."""

    def test_disabled(self) -> None:
        """Test a journal without a file records nothing."""
        journal = RunJournal()
        assert not journal.enabled
        assert journal.record("build", "linear-damped-oscillator", "SUCCESS") is None

    def test_records_json_lines(self, clean_environment) -> None:
        """Test one JSON entry per command."""
        path = clean_environment / "journal" / "runs.log"
        journal = RunJournal(str(path))
        journal.record("build", "linear-damped-oscillator", "SUCCESS", {"output": "out"})
        journal.record("compare", "x.toml", "FAILED", {"exit_code": 2})
        journal.close()
        entries = [json.loads(line) for line in path.read_text().splitlines()]
        assert [e["command"] for e in entries] == ["build", "compare"]
        assert entries[0]["details"] == {"output": "out"}
        assert entries[1]["status"] == "FAILED"
        assert "timestamp" in entries[0]
