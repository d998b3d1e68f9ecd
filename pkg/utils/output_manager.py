"""
Output management for laboratory artifacts.

Every file a command produces goes through here so that a failed or
interrupted run never leaves a half-written dataset, checkpoint or report.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel

logger = logging.getLogger(__name__)


def atomic_write_text(path: Path, text: str) -> Path:
    """Write ``text`` to a temporary file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


class OutputManager:
    """Manage and organize the outputs of one command."""

    def __init__(self, base_dir: Optional[Path] = None):
        self.base_dir = Path(base_dir) if base_dir is not None else None

    def resolve(self, path: Path) -> Path:
        """Relative paths land under the base directory when one is set."""
        path = Path(path)
        if self.base_dir is not None and not path.is_absolute():
            return self.base_dir / path
        return path

    def write_text(self, path: Path, text: str) -> Path:
        target = atomic_write_text(self.resolve(path), text)
        logger.debug(f"Wrote {target}")
        return target

    def write_json(self, path: Path, payload: Any, indent: Optional[int] = 2) -> Path:
        return self.write_text(path, json.dumps(payload, indent=indent, ensure_ascii=False, default=str))

    def write_manifest(self, output_path: Path, manifest: BaseModel) -> Path:
        """Save ``<output>.manifest.json`` beside the primary output."""
        output_path = self.resolve(output_path)
        manifest_path = manifest_path_for(output_path)
        return self.write_json(manifest_path, manifest.model_dump())

    def describe(self, outputs: Dict[str, Path]) -> Dict[str, str]:
        return {name: str(self.resolve(path)) for name, path in outputs.items()}


def manifest_path_for(output_path: Path) -> Path:
    output_path = Path(output_path)
    return output_path.with_name(output_path.name + ".manifest.json")
