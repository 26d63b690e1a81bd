"""
Keyframe Extraction

Frame differencing in HSV, Hann smoothing of the difference series, strict
local maxima, per-frame quality scores, DCT features and cluster-based
selection of one representative frame per visual group.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
from PIL import Image
from scipy import fft, ndimage
from skimage.filters.rank import entropy as rank_entropy
from skimage.morphology import disk
from tqdm import tqdm

from clustering.hdbscan import ClusterLabels, hdbscan
from utils.errors import BadWindow, DimensionMismatch, TooFewFrames, WrongColorSpace
from video.frames import Frame, check_uniform, ensure_hsv, to_grayscale, to_grayscale_u8

logger = logging.getLogger("convergex.video")

LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class FrameDiffSeries:
    """SAD values between consecutive frames; values[i] compares frames i and i+1"""
    values: np.ndarray
    smoothed: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class KeyframeCandidate:
    frame_index: int
    timestamp: float
    brightness: float
    entropy_score: float
    sharpness: float
    feature: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Keyframe:
    candidate: KeyframeCandidate
    cluster_id: int

    @property
    def frame_index(self) -> int:
        return self.candidate.frame_index

    def manifest_entry(self) -> Dict[str, Any]:
        c = self.candidate
        return {
            "frame_index": c.frame_index,
            "timestamp_s": c.timestamp,
            "brightness": c.brightness,
            "entropy": c.entropy_score,
            "sharpness": c.sharpness,
            "cluster_id": self.cluster_id,
        }


@dataclass
class KeyframeResult:
    keyframes: List[Keyframe] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def manifest(self) -> List[Dict[str, Any]]:
        return [k.manifest_entry() for k in self.keyframes]


def sad(a: Frame, b: Frame) -> int:
    """
    Sum of absolute differences over all pixels and channels.

    Raises:
        WrongColorSpace: unless both frames are HSV
        DimensionMismatch: if the frames differ in size
    """
    if a.color_space != "hsv" or b.color_space != "hsv":
        raise WrongColorSpace("sad compares HSV frames")
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(f"cannot compare {a.data.shape} with {b.data.shape}")
    return int(np.abs(a.data.astype(np.int64) - b.data.astype(np.int64)).sum())


def diff_series(frames: Sequence[Frame]) -> FrameDiffSeries:
    """
    SAD between every pair of consecutive frames, after HSV conversion.

    Raises:
        TooFewFrames: with fewer than two frames
    """
    if len(frames) < 2:
        raise TooFewFrames(f"need at least 2 frames, got {len(frames)}")
    check_uniform(list(frames))
    hsv = [ensure_hsv(f) for f in frames]
    values = np.array([sad(a, b) for a, b in zip(hsv[:-1], hsv[1:])], dtype=np.float64)
    return FrameDiffSeries(values)


def hann_kernel(window_len: int) -> np.ndarray:
    window = np.hanning(window_len)
    return window / window.sum()


def smooth_series(series: FrameDiffSeries, window_len: int = 25) -> FrameDiffSeries:
    """
    Convolve with a normalized Hann window. The series is mirror-padded
    (edge sample not repeated) so the output keeps the input length.

    Raises:
        BadWindow: if window_len is even, below 3 or longer than the series
    """
    n = len(series.values)
    if window_len % 2 == 0 or window_len < 3 or window_len > n:
        raise BadWindow(f"window_len must be odd, >= 3 and <= {n}, got {window_len}")
    half = window_len // 2
    padded = np.pad(series.values, half, mode="reflect")
    smoothed = np.convolve(padded, hann_kernel(window_len), mode="valid")
    return FrameDiffSeries(series.values, np.maximum(smoothed, 0.0))


def local_maxima(values: np.ndarray, order: int = 5, include_boundary: bool = False) -> List[int]:
    """
    Indices strictly greater than every existing neighbour within +-order.
    The first and last index are only eligible when include_boundary is set.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n == 0:
        return []
    is_max = np.ones(n, dtype=bool)
    for shift in range(1, order + 1):
        if shift >= n:
            break
        is_max[shift:] &= values[shift:] > values[:-shift]
        is_max[:-shift] &= values[:-shift] > values[shift:]
    if not include_boundary or n == 1:
        is_max[0] = False
        is_max[-1] = False
    return [int(i) for i in np.flatnonzero(is_max)]


def brightness(frame: Frame) -> float:
    """
    Mean of the V channel.

    Raises:
        WrongColorSpace: unless the frame is HSV
    """
    if frame.color_space != "hsv":
        raise WrongColorSpace("brightness is measured on HSV frames")
    return float(frame.data[..., 2].mean())


def local_entropy(frame: Frame, radius: int = 5) -> float:
    """Mean per-pixel Shannon entropy (bits) of the grayscale histogram inside a disk"""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    return float(rank_entropy(to_grayscale_u8(frame), disk(radius)).mean())


def laplacian_variance(frame: Frame) -> float:
    """Population variance of the 3x3 Laplacian response, mirror padding"""
    response = ndimage.convolve(to_grayscale(frame), LAPLACIAN_KERNEL, mode="mirror")
    return float(response.var())


def dct_features(frame: Frame, resize_to: int = 32, keep: int = 8) -> np.ndarray:
    """
    Low-frequency DCT descriptor: grayscale, bilinear resize to
    resize_to x resize_to, orthonormal 2-D DCT-II, top-left keep x keep block
    flattened row-major.
    """
    gray = to_grayscale(frame).astype(np.float32)
    image = Image.fromarray(gray)
    if image.size != (resize_to, resize_to):
        image = image.resize((resize_to, resize_to), Image.Resampling.BILINEAR)
    resized = np.asarray(image, dtype=np.float64)
    coefficients = fft.dctn(resized, type=2, norm="ortho")
    return coefficients[:keep, :keep].reshape(-1).copy()


def score_frame(frame: Frame, cfg: Mapping[str, Any]) -> KeyframeCandidate:
    hsv = ensure_hsv(frame)
    return KeyframeCandidate(
        frame_index=frame.index,
        timestamp=frame.timestamp,
        brightness=brightness(hsv),
        entropy_score=local_entropy(frame, cfg.get("entropy_radius", 5)),
        sharpness=laplacian_variance(frame),
        feature=dct_features(frame, cfg.get("dct_size", 32), cfg.get("dct_keep", 8)),
    )


def quality_filter(cands: Sequence[KeyframeCandidate], cfg: Mapping[str, Any]) -> List[KeyframeCandidate]:
    """
    Keep candidates with brightness inside the band and enough local entropy.

    In absolute mode the band is [brightness_lo, brightness_hi] and the floor is
    min_entropy. In percentile mode both are percentiles of the candidate set.
    Input order is preserved.
    """
    if not cands:
        return []
    if cfg.get("quality_mode", "absolute") == "percentile":
        values = np.array([c.brightness for c in cands])
        lo_pct, hi_pct = cfg.get("brightness_percentiles", (10.0, 90.0))
        lo, hi = float(np.percentile(values, lo_pct)), float(np.percentile(values, hi_pct))
        min_entropy = float(np.percentile([c.entropy_score for c in cands], cfg.get("entropy_percentile", 25.0)))
    else:
        lo, hi = cfg.get("brightness_lo", 25.5), cfg.get("brightness_hi", 229.5)
        min_entropy = cfg.get("min_entropy", 1.0)

    kept = [c for c in cands if lo <= c.brightness <= hi and c.entropy_score >= min_entropy]
    if not kept:
        logger.warning(
            f"quality filter removed every candidate candidates={len(cands)} "
            f"brightness_band=[{lo:.2f},{hi:.2f}] min_entropy={min_entropy:.3f}"
        )
    return kept


def _cluster_candidates(cands: List[KeyframeCandidate], cluster_cfg: Mapping[str, Any]) -> ClusterLabels:
    min_cluster_size = cluster_cfg.get("min_cluster_size", 5)
    min_samples = cluster_cfg.get("min_samples") or min_cluster_size
    if len(cands) < min_cluster_size or min_samples >= len(cands):
        logger.debug(f"{len(cands)} candidates are too few to cluster; treating all as noise")
        return ClusterLabels(np.full(len(cands), -1, dtype=np.int64))
    points = np.vstack([c.feature for c in cands])
    return hdbscan(points, min_cluster_size, min_samples)


def pick_representatives(cands: Sequence[KeyframeCandidate], labels: ClusterLabels,
                         drop_noise: bool = False) -> List[Keyframe]:
    """
    The sharpest candidate of every cluster (ties to the lowest frame index).
    Noise candidates become their own single-frame groups unless drop_noise.
    """
    groups: Dict[int, List[KeyframeCandidate]] = {}
    noise: List[KeyframeCandidate] = []
    for cand, label in zip(cands, labels.labels):
        if label < 0:
            noise.append(cand)
        else:
            groups.setdefault(int(label), []).append(cand)

    keyframes = [
        Keyframe(max(members, key=lambda c: (c.sharpness, -c.frame_index)), label)
        for label, members in groups.items()
    ]
    if not drop_noise:
        keyframes.extend(Keyframe(c, -1) for c in noise)
    keyframes.sort(key=lambda k: k.frame_index)
    return keyframes


def select_keyframes(frames: Sequence[Frame],
                     video_cfg: Optional[Mapping[str, Any]] = None,
                     cluster_cfg: Optional[Mapping[str, Any]] = None) -> KeyframeResult:
    """
    Run the full keyframe pipeline.

    Args:
        frames: Frames in temporal order
        video_cfg: The videokey config section
        cluster_cfg: The cluster config section

    Returns:
        KeyframeResult sorted by frame index; empty with a warning when no
        candidate survives

    Raises:
        TooFewFrames: with fewer than two frames
    """
    video_cfg = video_cfg or {}
    cluster_cfg = cluster_cfg or {}
    result = KeyframeResult()

    series = diff_series(frames)
    n = len(series)
    window_len = min(video_cfg.get("window_len", 25), n if n % 2 == 1 else n - 1)
    if window_len >= 3:
        series = smooth_series(series, window_len)
        signal = series.smoothed
    else:
        signal = series.values

    maxima = local_maxima(signal, video_cfg.get("order", 5), video_cfg.get("include_boundary_maxima", False))
    # maximum i marks the change entering frame i + 1
    candidate_positions = [i + 1 for i in maxima]
    if candidate_positions and video_cfg.get("seed_first_shot", True):
        candidate_positions = [0] + candidate_positions

    if not candidate_positions:
        message = "NoCandidates: no local maxima in the frame difference series"
        logger.warning(f"{message} frames={len(frames)}")
        result.warnings.append(message)
        return result

    selected_frames = [frames[pos] for pos in candidate_positions]
    cands = [
        score_frame(frame, video_cfg)
        for frame in tqdm(selected_frames, desc="scoring frames", disable=not video_cfg.get("progress", False))
    ]
    cands = quality_filter(cands, video_cfg)
    if not cands:
        message = "NoCandidates: every candidate failed the quality filter"
        result.warnings.append(message)
        return result

    labels = _cluster_candidates(cands, cluster_cfg)
    result.keyframes = pick_representatives(cands, labels, cluster_cfg.get("drop_noise", False))
    logger.info(
        f"Selected {len(result.keyframes)} keyframes from {len(frames)} frames "
        f"(candidates={len(cands)} clusters={labels.cluster_count} noise={labels.noise_count})"
    )
    if not result.keyframes:
        result.warnings.append("NoCandidates: every candidate was clustering noise")
    return result
