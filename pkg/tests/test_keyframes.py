import colorsys
import io
import json

import numpy as np
import pytest
from scipy import ndimage

from clustering.hdbscan import ClusterLabels
from utils.errors import BadWindow, DimensionMismatch, TooFewFrames, WrongColorSpace
from video.frames import Frame, load_frames_dir, read_raw_stream, rgb_to_hsv, to_grayscale
from video.keyframes import (
    FrameDiffSeries, KeyframeCandidate, brightness, dct_features, diff_series, hann_kernel,
    laplacian_variance, local_entropy, local_maxima, pick_representatives, quality_filter,
    sad, score_frame, select_keyframes, smooth_series,
)
from tests.conftest import FIXTURE_DIR, scene_video, textured_frame

SAMPLE_FRAMES = FIXTURE_DIR / "media" / "dl-intro" / "frames"


def solid(rgb, size=4, index=0):
    return Frame(np.full((size, size, 3), rgb, dtype=np.uint8), index)


def checkerboard(size=16, square=1):
    yy, xx = np.indices((size, size))
    board = (((yy // square) + (xx // square)) % 2 * 255).astype(np.uint8)
    return Frame(np.repeat(board[..., None], 3, axis=2))


# Color conversion and differencing

@pytest.mark.parametrize("rgb,expected", [
    ((0, 0, 0), (0, 0, 0)),
    ((255, 0, 0), (0, 255, 255)),
    ((0, 255, 0), (85, 255, 255)),
    ((128, 128, 128), (0, 0, 128)),
])
def test_rgb_to_hsv_examples(rgb, expected):
    hsv = rgb_to_hsv(solid(rgb, size=1))
    assert hsv.color_space == "hsv"
    assert tuple(int(v) for v in hsv.data[0, 0]) == expected


def test_rgb_to_hsv_matches_colorsys():
    rng = np.random.default_rng(1)
    frame = Frame(rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8))
    hsv = rgb_to_hsv(frame).data.astype(int)
    for y in range(12):
        for x in range(12):
            r, g, b = (frame.data[y, x] / 255.0).tolist()
            h, s, v = colorsys.rgb_to_hsv(r, g, b)
            expected = np.array([h * 255, s * 255, v * 255])
            assert np.all(np.abs(hsv[y, x] - expected) <= 1.0)


def test_rgb_to_hsv_rejects_hsv_input():
    hsv = rgb_to_hsv(solid((10, 20, 30)))
    with pytest.raises(WrongColorSpace):
        rgb_to_hsv(hsv)


def test_sad_examples():
    black, white = rgb_to_hsv(solid((0, 0, 0), 2)), rgb_to_hsv(solid((255, 255, 255), 2))
    assert sad(black, black) == 0
    assert sad(black, white) == 4 * 255


def test_sad_errors():
    with pytest.raises(WrongColorSpace):
        sad(solid((0, 0, 0)), solid((0, 0, 0)))
    with pytest.raises(DimensionMismatch):
        sad(rgb_to_hsv(solid((0, 0, 0), 2)), rgb_to_hsv(solid((0, 0, 0), 3)))


def test_sad_is_metric_like():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a, b, c = (rgb_to_hsv(Frame(rng.integers(0, 256, (6, 6, 3), dtype=np.uint8))) for _ in range(3))
        assert sad(a, b) == sad(b, a)
        assert sad(a, a) == 0
        assert sad(a, c) <= sad(a, b) + sad(b, c)
        if not np.array_equal(a.data, b.data):
            assert sad(a, b) > 0


def test_diff_series_examples():
    frames = [solid((9, 9, 9), index=i) for i in range(5)]
    assert diff_series(frames).values.tolist() == [0.0] * 4

    alternating = [solid((0, 0, 0) if i % 2 == 0 else (255, 255, 255), index=i) for i in range(6)]
    values = diff_series(alternating).values
    assert len(set(values.tolist())) == 1 and values[0] > 0

    assert len(diff_series(frames[:2])) == 1


def test_diff_series_needs_two_frames():
    with pytest.raises(TooFewFrames):
        diff_series([solid((0, 0, 0))])


# Smoothing and maxima

def test_hann_kernel_is_normalized_and_symmetric():
    kernel = hann_kernel(25)
    assert kernel.sum() == pytest.approx(1.0)
    assert np.allclose(kernel, kernel[::-1])


def test_smooth_series_keeps_length_and_constants():
    series = FrameDiffSeries(np.full(30, 7.0))
    smoothed = smooth_series(series, 25).smoothed
    assert len(smoothed) == 30
    assert np.allclose(smoothed, 7.0)


def test_smooth_series_spike_peaks_in_place():
    values = np.zeros(60)
    values[20] = 100.0
    smoothed = smooth_series(FrameDiffSeries(values), 9).smoothed
    assert int(np.argmax(smoothed)) == 20
    assert smoothed.sum() == pytest.approx(100.0)


@pytest.mark.parametrize("window_len", [4, 1, 12])
def test_smooth_series_bad_window(window_len):
    with pytest.raises(BadWindow):
        smooth_series(FrameDiffSeries(np.zeros(10)), window_len)


@pytest.mark.parametrize("values,order,expected", [
    ([0, 1, 0, 2, 0], 1, [1, 3]),
    ([0, 1, 2, 3, 4], 1, []),
    ([1, 1, 1], 1, []),
    ([0, 3, 1, 2, 0], 2, [1]),
])
def test_local_maxima(values, order, expected):
    assert local_maxima(np.array(values, dtype=float), order) == expected


def test_local_maxima_boundary_policy():
    assert local_maxima(np.array([0, 1, 2, 3, 4.0]), 1, include_boundary=True) == [4]


def test_local_maxima_matches_neighbourhood_oracle():
    rng = np.random.default_rng(6)
    for _ in range(300):
        values = rng.integers(0, 5, size=rng.integers(1, 20)).astype(float)
        order = int(rng.integers(1, 4))
        expected = [
            i for i in range(1, len(values) - 1)
            if all(values[i] > values[j] for j in range(max(0, i - order), min(len(values), i + order + 1)) if j != i)
        ]
        assert local_maxima(values, order) == expected


# Frame quality scores

def test_brightness():
    data = np.zeros((2, 2, 3), dtype=np.uint8)
    data[0, :, 2] = 255
    assert brightness(Frame(data, color_space="hsv")) == 127.5
    with pytest.raises(WrongColorSpace):
        brightness(solid((1, 2, 3)))


def test_local_entropy():
    rng = np.random.default_rng(0)
    assert local_entropy(solid((90, 90, 90), 16)) == 0.0
    assert local_entropy(checkerboard(32)) == pytest.approx(1.0, abs=0.02)
    assert local_entropy(textured_frame(rng)) > local_entropy(solid((90, 90, 90), 24))


def laplacian_oracle(gray):
    padded = np.pad(gray, 1, mode="reflect")
    h, w = gray.shape
    response = np.zeros_like(gray)
    for y in range(h):
        for x in range(w):
            py, px = y + 1, x + 1
            response[y, x] = (padded[py - 1, px] + padded[py + 1, px] + padded[py, px - 1]
                              + padded[py, px + 1] - 4 * padded[py, px])
    return response.var()


def test_laplacian_variance():
    assert laplacian_variance(solid((50, 50, 50), 8)) == pytest.approx(0.0, abs=1e-9)

    data = np.zeros((5, 5, 3), dtype=np.uint8)
    data[2, 2] = 255
    dot = Frame(data)
    assert laplacian_variance(dot) == pytest.approx(laplacian_oracle(to_grayscale(dot)))

    sharp = checkerboard(16, 2)
    blurred = Frame(np.clip(np.rint(ndimage.gaussian_filter(sharp.data.astype(float), sigma=(1.5, 1.5, 0))),
                            0, 255).astype(np.uint8))
    assert laplacian_variance(sharp) > laplacian_variance(blurred)


def dct_matrix(n):
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    matrix = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    matrix[0] /= np.sqrt(2.0)
    return matrix


def test_dct_features_constant_image():
    features = dct_features(solid((100, 100, 100), 32))
    assert features.shape == (64,)
    assert features[0] == pytest.approx(3200.0, rel=1e-5)
    assert np.all(np.abs(features[1:]) < 1e-3)


def test_dct_features_match_matrix_oracle():
    rng = np.random.default_rng(12)
    frame = Frame(rng.integers(0, 256, (32, 32, 3), dtype=np.uint8))
    gray = to_grayscale(frame).astype(np.float32).astype(np.float64)
    c = dct_matrix(32)
    expected = (c @ gray @ c.T)[:8, :8].reshape(-1)
    assert np.allclose(dct_features(frame), expected, atol=1e-6)


def test_dct_features_horizontal_cosine_energy_in_first_row():
    x = np.arange(32)
    row = 128 + 100 * np.cos(np.pi * (2 * x + 1) * 3 / 64)
    gray = np.tile(np.rint(row), (32, 1)).astype(np.uint8)
    features = dct_features(Frame(np.repeat(gray[..., None], 3, axis=2)))
    energy = features ** 2
    assert energy[:8].sum() / energy.sum() > 0.99
    assert int(np.argmax(np.abs(features[1:8]))) + 1 == 3


def test_dct_features_are_deterministic():
    rng = np.random.default_rng(2)
    frame = textured_frame(rng)
    copy = Frame(frame.data.copy())
    assert np.array_equal(dct_features(frame), dct_features(copy))


# Filtering and selection

def _candidate(index, brightness_value=128.0, entropy_value=3.0, sharpness=1.0):
    return KeyframeCandidate(index, index / 30.0, brightness_value, entropy_value, sharpness)


def test_quality_filter_scored_frames(config):
    rng = np.random.default_rng(5)
    black = score_frame(solid((0, 0, 0), 24), config["videokey"])
    textured = score_frame(textured_frame(rng, index=1), config["videokey"])
    assert quality_filter([black, textured], config["videokey"]) == [textured]


def test_quality_filter_identity_thresholds():
    cands = [_candidate(0, 0.0, 0.0), _candidate(1, 255.0, 0.0), _candidate(2)]
    cfg = {"brightness_lo": 0, "brightness_hi": 255, "min_entropy": 0}
    assert quality_filter(cands, cfg) == cands


def test_quality_filter_percentile_mode():
    cands = [_candidate(i, float(i * 10), float(i)) for i in range(11)]
    cfg = {"quality_mode": "percentile", "brightness_percentiles": [10.0, 90.0], "entropy_percentile": 0.0}
    kept = quality_filter(cands, cfg)
    assert [c.frame_index for c in kept] == list(range(1, 10))


def test_pick_representatives_takes_sharpest_of_cluster():
    cands = [_candidate(0, sharpness=2.0), _candidate(1, sharpness=9.0), _candidate(2, sharpness=9.0)]
    keyframes = pick_representatives(cands, ClusterLabels(np.zeros(3, dtype=np.int64)))
    assert [k.frame_index for k in keyframes] == [1]
    assert keyframes[0].cluster_id == 0


def test_pick_representatives_noise_policy():
    cands = [_candidate(0), _candidate(1)]
    labels = ClusterLabels(np.full(2, -1, dtype=np.int64))
    assert [k.frame_index for k in pick_representatives(cands, labels)] == [0, 1]
    assert pick_representatives(cands, labels, drop_noise=True) == []


def test_select_keyframes_three_scenes(config, three_scene_video):
    result = select_keyframes(three_scene_video, config["videokey"], config["cluster"])
    assert [k.frame_index for k in result.keyframes] == [0, 30, 60]
    assert [entry["timestamp_s"] for entry in result.manifest()] == [0.0, 1.0, 2.0]
    assert result.warnings == []


def test_select_keyframes_one_per_scene_for_longer_video(config):
    frames = scene_video(scenes=4, per_scene=40, seed=21)
    result = select_keyframes(frames, config["videokey"], config["cluster"])
    scenes = [k.frame_index // 40 for k in result.keyframes]
    assert scenes == [0, 1, 2, 3]


def test_select_keyframes_identical_frames(config):
    frames = [solid((120, 60, 30), 8, i) for i in range(40)]
    result = select_keyframes(frames, config["videokey"], config["cluster"])
    assert result.keyframes == []
    assert result.warnings and result.warnings[0].startswith("NoCandidates")


def test_select_keyframes_is_deterministic(config, three_scene_video):
    first = select_keyframes(three_scene_video, config["videokey"], config["cluster"]).manifest()
    second = select_keyframes(scene_video(), config["videokey"], config["cluster"]).manifest()
    assert first == second


def test_select_keyframes_needs_two_frames(config):
    with pytest.raises(TooFewFrames):
        select_keyframes([solid((1, 1, 1))], config["videokey"], config["cluster"])


# Ingestion

def test_load_sample_frames(config):
    frames = load_frames_dir(SAMPLE_FRAMES, 30.0)
    assert len(frames) == 90
    assert [f.index for f in frames[:3]] == [0, 1, 2]
    assert frames[0].data.shape == (24, 24, 3)
    result = select_keyframes(frames, config["videokey"], config["cluster"])
    assert [k.frame_index for k in result.keyframes] == [0, 30, 60]


def test_load_frames_dir_errors(tmp_path):
    with pytest.raises(TooFewFrames):
        load_frames_dir(tmp_path, 30.0)
    with pytest.raises(FileNotFoundError):
        load_frames_dir(tmp_path / "missing", 30.0)


def test_read_raw_stream():
    buffer = io.BytesIO()
    for value in (0, 128):
        buffer.write(json.dumps({"width": 2, "height": 1, "format": "rgb24"}).encode() + b"\n")
        buffer.write(bytes([value] * 6))
    buffer.seek(0)
    frames = read_raw_stream(buffer, 25.0)
    assert [f.index for f in frames] == [0, 1]
    assert frames[1].data.shape == (1, 2, 3)
    assert frames[1].timestamp == pytest.approx(0.04)


def test_read_raw_stream_truncated():
    buffer = io.BytesIO(json.dumps({"width": 2, "height": 2}).encode() + b"\n" + b"\x00" * 5)
    with pytest.raises(ValueError):
        read_raw_stream(buffer, 30.0)
