"""Logging configuration and the run journal."""

import json
import logging
import logging.config
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from pythonjsonlogger import jsonlogger

from .config import Settings, get_settings

TEXT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
JSON_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logging(settings: Union[Settings, None] = None) -> None:
    """Configure toolkit logging.

    Loads the dictConfig YAML named in the settings when it exists, otherwise
    falls back to a single console handler.
    """
    settings = settings or get_settings()
    level = getattr(logging, settings.logging.level.upper())
    config_path = Path(settings.logging.config_file)

    if config_path.exists():
        try:
            with open(config_path) as f:
                config = yaml.safe_load(f) or {}
            for handler in config.get("handlers", {}).values():
                filename = handler.get("filename")
                if filename:
                    Path(filename).parent.mkdir(parents=True, exist_ok=True)
            logging.config.dictConfig(config)
        except (OSError, ValueError, yaml.YAMLError) as e:
            logging.basicConfig(level=level, format=TEXT_FORMAT, datefmt=DATE_FORMAT)
            logging.getLogger(__name__).warning(f"Ignoring logging config {config_path}: {e}")
    else:
        logging.basicConfig(level=level, format=TEXT_FORMAT, datefmt=DATE_FORMAT)

    root = logging.getLogger("kofx")
    root.setLevel(level)
    if settings.logging.format == "json":
        formatter = jsonlogger.JsonFormatter(JSON_FORMAT, datefmt=DATE_FORMAT)
        for handler in root.handlers or logging.getLogger().handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(
                handler, logging.FileHandler
            ):
                handler.setFormatter(formatter)


class RunJournal:
    """Journal of CLI command executions."""

    def __init__(self, journal_file: Union[str, None] = None) -> None:
        """Initialize the journal.

        Args:
            journal_file: File receiving one JSON entry per command; None disables it
        """
        self.journal_file = journal_file
        self.logger = logging.getLogger("kofx.journal")
        self.logger.propagate = False

        if journal_file and not self.logger.handlers:
            log_path = Path(journal_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)

            handler = logging.FileHandler(journal_file)
            handler.setFormatter(logging.Formatter("%(message)s"))
            self.logger.addHandler(handler)
            self.logger.setLevel(logging.INFO)

    @property
    def enabled(self) -> bool:
        """Whether entries are written."""
        return self.journal_file is not None

    def record(
        self,
        command: str,
        scenario: str,
        status: str,
        details: Union[Dict[str, Any], None] = None,
    ) -> Union[Dict[str, Any], None]:
        """Record a command execution.

        Args:
            command: Subcommand name (build, propagate, filter, compare)
            scenario: Scenario preset name or file path
            status: SUCCESS or FAILED
            details: Additional details (exit code, output directory, error code)

        Returns:
            The entry written, or None when the journal is disabled
        """
        if not self.enabled:
            return None

        entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "command": command,
            "scenario": scenario,
            "status": status,
            "details": details or {},
        }

        self.logger.info(json.dumps(entry, sort_keys=True))
        return entry

    def close(self) -> None:
        """Detach and close file handlers."""
        for handler in list(self.logger.handlers):
            handler.close()
            self.logger.removeHandler(handler)
