"""
Frames

Frame container, color conversion, grayscale conversion and frame ingestion
from a directory of numbered images or from a raw rgb24 stream.
"""

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator, List, Union

import numpy as np
from PIL import Image

from utils.errors import DimensionMismatch, TooFewFrames, WrongColorSpace

logger = logging.getLogger("convergex.video")

COLOR_SPACES = ("rgb", "hsv")
FRAME_NAME = re.compile(r"^frame_(\d+)\.(png|ppm)$", re.IGNORECASE)

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class Frame:
    """One video frame: uint8 pixels of shape (height, width, 3)"""
    data: np.ndarray
    index: int = 0
    fps: float = 30.0
    color_space: str = "rgb"

    def __post_init__(self):
        if self.color_space not in COLOR_SPACES:
            raise ValueError(f"Unknown color space: {self.color_space}")
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise DimensionMismatch(f"frame data must have shape (h, w, 3), got {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DimensionMismatch("frame must be at least 1x1")
        if self.data.dtype != np.uint8:
            raise ValueError(f"frame data must be uint8, got {self.data.dtype}")
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def timestamp(self) -> float:
        return self.index / self.fps

    def with_data(self, data: np.ndarray, color_space: str) -> "Frame":
        return Frame(data, self.index, self.fps, color_space)


def rgb_to_hsv(frame: Frame) -> Frame:
    """
    Convert an RGB frame to HSV with every channel scaled to [0, 255].

    Hue degrees are mapped as h/360*255. Quantization rounds to nearest,
    ties to even.

    Raises:
        WrongColorSpace: if the frame is already HSV
    """
    if frame.color_space != "rgb":
        raise WrongColorSpace(f"frame {frame.index} is already {frame.color_space}")

    rgb = frame.data.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=2)
    cmin = rgb.min(axis=2)
    delta = cmax - cmin

    safe_delta = np.where(delta == 0, 1.0, delta)
    hue = np.zeros_like(cmax)
    hue = np.where(cmax == r, ((g - b) / safe_delta) % 6.0, hue)
    hue = np.where((cmax == g) & (cmax != r), (b - r) / safe_delta + 2.0, hue)
    hue = np.where((cmax == b) & (cmax != r) & (cmax != g), (r - g) / safe_delta + 4.0, hue)
    hue = np.where(delta == 0, 0.0, hue) * 60.0

    saturation = np.where(cmax == 0, 0.0, delta / np.where(cmax == 0, 1.0, cmax)) * 255.0

    hsv = np.stack([hue / 360.0 * 255.0, saturation, cmax], axis=2)
    quantized = np.clip(np.rint(hsv), 0, 255).astype(np.uint8)
    return frame.with_data(quantized, "hsv")


def ensure_hsv(frame: Frame) -> Frame:
    return frame if frame.color_space == "hsv" else rgb_to_hsv(frame)


def to_grayscale(frame: Frame) -> np.ndarray:
    """
    Float64 grayscale image: BT.601 luma for RGB frames, the V channel for
    HSV frames.
    """
    if frame.color_space == "hsv":
        return frame.data[..., 2].astype(np.float64)
    return frame.data.astype(np.float64) @ LUMA_WEIGHTS


def to_grayscale_u8(frame: Frame) -> np.ndarray:
    return np.clip(np.rint(to_grayscale(frame)), 0, 255).astype(np.uint8)


def check_uniform(frames: List[Frame]) -> None:
    shape = frames[0].data.shape
    for frame in frames[1:]:
        if frame.data.shape != shape:
            raise DimensionMismatch(
                f"frame {frame.index} has shape {frame.data.shape}, expected {shape}"
            )


def load_frames_dir(path: Union[str, Path], fps: float) -> List[Frame]:
    """
    Load frame_%06d.png / .ppm files from a directory in numeric order.

    Args:
        path: Directory holding the numbered images
        fps: Frames per second used for timestamps

    Returns:
        Frames indexed by their file number

    Raises:
        TooFewFrames: if the directory holds no frame images
        DimensionMismatch: if the images differ in size
    """
    if fps <= 0:
        raise ValueError("fps must be positive")
    directory = Path(path)
    if not directory.is_dir():
        raise FileNotFoundError(f"Frames directory not found: {directory}")

    numbered = []
    for entry in directory.iterdir():
        match = FRAME_NAME.match(entry.name)
        if match:
            numbered.append((int(match.group(1)), entry))
    if not numbered:
        raise TooFewFrames(f"no frame_%06d.png/.ppm images in {directory}")

    frames = []
    for number, entry in sorted(numbered):
        with Image.open(entry) as image:
            data = np.asarray(image.convert("RGB"), dtype=np.uint8).copy()
        frames.append(Frame(data, number, fps))
    check_uniform(frames)
    logger.debug(f"Loaded {len(frames)} frames from {directory}")
    return frames


def iter_raw_stream(stream: BinaryIO, fps: float) -> Iterator[Frame]:
    """
    Read frames from a raw stream. Each frame is preceded by a one-line JSON
    header {"width": W, "height": H, "format": "rgb24"}.
    """
    index = 0
    while True:
        header_line = stream.readline()
        if not header_line:
            return
        if not header_line.strip():
            continue
        try:
            header = json.loads(header_line)
            width, height = int(header["width"]), int(header["height"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ValueError(f"bad raw frame header at frame {index}: {e}") from e
        if header.get("format", "rgb24") != "rgb24":
            raise ValueError(f"unsupported raw frame format: {header.get('format')}")
        size = width * height * 3
        payload = stream.read(size)
        if len(payload) != size:
            raise ValueError(f"truncated raw frame {index}: expected {size} bytes, got {len(payload)}")
        data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()
        yield Frame(data, index, fps)
        index += 1


def read_raw_stream(stream: BinaryIO, fps: float) -> List[Frame]:
    frames = list(iter_raw_stream(stream, fps))
    if frames:
        check_uniform(frames)
    return frames
