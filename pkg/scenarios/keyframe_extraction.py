# scenarios/keyframe_extraction.py

import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from utils.errors import ConfigError
from utils.state_manager import StateManager, canonical_json
from video.frames import Frame, load_frames_dir, read_raw_stream
from video.keyframes import KeyframeResult, select_keyframes

logger = logging.getLogger("convergex.commands")


class KeyframeExtraction:
    def __init__(self, config: Mapping[str, Any], fps: float):
        """
        Initialize a keyframe extraction run

        Args:
            config: Full configuration
            fps: Frames per second of the input
        """
        if not fps > 0:
            raise ConfigError(f"--fps must be positive, got {fps}")
        self.config = config
        self.video_cfg = {**config["videokey"], "fps": fps}
        self.fps = fps

    def load(self, source: str, raw: bool = False) -> List[Frame]:
        """Frames from a directory of numbered images, or a raw stream file ("-" for stdin)"""
        if not raw:
            return load_frames_dir(source, self.fps)
        if source == "-":
            return read_raw_stream(sys.stdin.buffer, self.fps)
        with open(source, "rb") as stream:
            return read_raw_stream(stream, self.fps)

    def run(self, frames: List[Frame]) -> KeyframeResult:
        return select_keyframes(frames, self.video_cfg, self.config["cluster"])

    def manifest(self, frames: List[Frame], result: KeyframeResult) -> Dict[str, Any]:
        return {
            "fps": self.fps,
            "frame_count": len(frames),
            "keyframes": result.manifest(),
            "warnings": result.warnings,
        }


def cmd_keyframes(frames_source: str, fps: float, out_dir: Optional[str],
                  config: Mapping[str, Any], raw: bool = False) -> int:
    """
    Select keyframes and write manifest.json plus keyframe_<index>.png.

    Without an output directory the manifest goes to stdout.

    Returns:
        0 on success, 3 when no keyframe survives
    """
    extraction = KeyframeExtraction(config, fps)
    frames = extraction.load(frames_source, raw)
    result = extraction.run(frames)
    manifest = extraction.manifest(frames, result)

    if out_dir is None:
        sys.stdout.write(canonical_json(manifest))
    else:
        by_index = {frame.index: frame for frame in frames}
        with StateManager(Path(out_dir)) as state:
            state.save_json("manifest.json", manifest)
            for keyframe in result.keyframes:
                state.save_image(f"keyframe_{keyframe.frame_index}.png", by_index[keyframe.frame_index].data)

    if not result.keyframes:
        logger.warning(f"no keyframes selected frames={len(frames)} warnings={result.warnings}")
        return 3
    return 0
