"""Run manifest written next to every output set."""

from pathlib import Path
from typing import Any, Dict, Union

from pydantic import BaseModel, Field

from kofx import __version__

MANIFEST_FILE = "manifest.json"


class RunManifest(BaseModel):
    """Everything needed to reproduce a command's outputs.

    Carries no timestamps so that identical runs write identical bytes.
    """

    command: str = Field(..., description="Subcommand name")
    scenario: str = Field(..., description="Preset name or scenario file path")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Resolved command parameters")
    seed: Union[int, None] = Field(None, description="Base seed of random streams")
    output_directory: str = Field(..., description="Directory holding the outputs")
    tool_version: str = Field(default=__version__, description="Toolkit version")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Output role -> file name")

    def write(self, directory: Union[str, Path]) -> Path:
        path = Path(directory) / MANIFEST_FILE
        path.write_text(self.model_dump_json(indent=2) + "\n")
        return path

    @classmethod
    def read(cls, path: Union[str, Path]) -> "RunManifest":
        return cls.model_validate_json(Path(path).read_text())
