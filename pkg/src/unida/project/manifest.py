"""Run manifests: what a command read and wrote, with content hashes."""

__all__ = ["RunManifest", "file_sha256", "MANIFEST_NAME"]

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Self

from pydantic import BaseModel, Field

from unida._version import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunManifest(BaseModel):
    """Record of one command run.

    Attributes:
        command (str): subcommand name.
        config_hash (str): hash of the canonical experiment config.
        version (str): toolkit version.
        seed (int): master seed.
        inputs (dict[str, str]): input path (relative to the output root) to SHA-256.
        outputs (dict[str, str]): output path to SHA-256.
        wall_clock_seconds (float): elapsed time.
    """

    command: str
    config_hash: str
    version: str = __version__
    seed: int
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    def add_inputs(self, root: Path, paths) -> Self:
        for path in paths:
            self.inputs[_relative(root, path)] = file_sha256(path)
        return self

    def add_outputs(self, root: Path, paths) -> Self:
        for path in paths:
            self.outputs[_relative(root, path)] = file_sha256(path)
        return self

    def write(self, root: str | Path) -> Path:
        """Merge this run into `<root>/manifest.json` (one entry per command), atomically."""
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        target = root / MANIFEST_NAME
        content = {"version": __version__, "runs": {}}
        if target.exists():
            try:
                content = json.loads(target.read_text())
            except json.JSONDecodeError:
                logger.warning(f"Replacing unreadable manifest {target}")
        content.setdefault("runs", {})[self.command] = self.model_dump(mode="json")
        content["version"] = __version__
        fd, tmp = tempfile.mkstemp(dir=root, prefix=".manifest-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as f:
                json.dump(content, f, indent=2, sort_keys=True)
                f.write("\n")
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        logger.info(f"Recorded '{self.command}' in {target}")
        return target

    @classmethod
    def read(cls, root: str | Path, command: str) -> Self | None:
        target = Path(root) / MANIFEST_NAME
        if not target.exists():
            return None
        entry = json.loads(target.read_text()).get("runs", {}).get(command)
        return None if entry is None else cls.model_validate(entry)


def _relative(root: Path, path) -> str:
    path = Path(path)
    try:
        return path.resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        return path.as_posix()
