"""
State Manager

Handles persistence of command outputs. Artifacts are staged in a temporary
directory next to the destination and moved into place only when the command
succeeds. Files already in the destination that the run did not write are kept.
"""

import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from PIL import Image

logger = logging.getLogger("convergex.output")


def canonical_json(data: Any, indent: Optional[int] = 2) -> str:
    """
    Serialize with sorted keys and LF line endings. With indent=None the
    output is the compact form used for request hashing.
    """
    if indent is None:
        return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return json.dumps(data, sort_keys=True, indent=indent, ensure_ascii=False) + "\n"


class StateManager:
    """
    Stages artifacts for one command run.

    Usage:
        with StateManager("out/run1") as state:
            state.save_json("digest.json", digest)
    """

    def __init__(self, output_dir: Union[str, Path], overwrite: bool = True):
        """Initialize state manager for a destination directory"""
        self.output_dir = Path(output_dir)
        self.overwrite = overwrite
        self.staging_dir: Optional[Path] = None

    def __enter__(self) -> "StateManager":
        target = self.output_dir.resolve()
        target.parent.mkdir(parents=True, exist_ok=True)
        self.staging_dir = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is None:
            self.commit()
        else:
            self.discard()
        return False

    def _path(self, relative: str) -> Path:
        if self.staging_dir is None:
            raise RuntimeError("StateManager used outside of a with block")
        path = self.staging_dir / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def save_json(self, relative: str, data: Any) -> Path:
        """
        Save canonical JSON

        Args:
            relative: Path inside the output directory
            data: JSON-serializable data

        Returns:
            Path of the staged file
        """
        path = self._path(relative)
        path.write_text(canonical_json(data), encoding="utf-8", newline="\n")
        return path

    def save_text(self, relative: str, text: str) -> Path:
        path = self._path(relative)
        if not text.endswith("\n"):
            text += "\n"
        path.write_text(text, encoding="utf-8", newline="\n")
        return path

    def save_image(self, relative: str, pixels: np.ndarray) -> Path:
        """Save an RGB uint8 array as PNG"""
        path = self._path(relative)
        Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).save(path, format="PNG")
        return path

    def commit(self) -> Path:
        """
        Move staged files into the output directory.

        An absent directory is created by one rename. In an existing directory
        only the files this run wrote are replaced; everything else is left alone.

        Raises:
            FileExistsError: if the destination exists and overwrite is off,
                or it is not a directory
        """
        if self.staging_dir is None:
            raise RuntimeError("Nothing staged")
        if not self.output_dir.exists():
            os.replace(self.staging_dir, self.output_dir)
        else:
            if not self.overwrite or not self.output_dir.is_dir():
                self.discard()
                raise FileExistsError(f"Output directory exists: {self.output_dir}")
            try:
                for staged in sorted(p for p in self.staging_dir.rglob("*") if p.is_file()):
                    target = self.output_dir / staged.relative_to(self.staging_dir)
                    target.parent.mkdir(parents=True, exist_ok=True)
                    os.replace(staged, target)
            finally:
                shutil.rmtree(self.staging_dir, ignore_errors=True)
        logger.info(f"Wrote outputs to {self.output_dir}")
        self.staging_dir = None
        return self.output_dir

    def discard(self) -> None:
        """Remove staged artifacts"""
        if self.staging_dir is not None:
            shutil.rmtree(self.staging_dir, ignore_errors=True)
            logger.debug(f"Discarded staged outputs for {self.output_dir}")
            self.staging_dir = None
