"""
Shared pytest fixtures: sample paths, configurations, fixture-backed service
clients and synthetic video frames.
"""

from pathlib import Path
from typing import List

import numpy as np
import pytest

from config.config import load_config
from core.client_factory import ClientFactory
from video.frames import Frame

ROOT = Path(__file__).resolve().parent.parent
SAMPLES = ROOT / "samples"
FIXTURE_DIR = SAMPLES / "fixtures"
CORPUS = SAMPLES / "corpus" / "papers.jsonl"
TOPICS = ("deeplearning", "statistics", "quantumphysics")
TOPIC_QUERIES = {
    "deeplearning": "deep learning",
    "statistics": "statistical inference",
    "quantumphysics": "quantum physics",
}


def textured_frame(rng: np.random.Generator, size: int = 24, index: int = 0, fps: float = 30.0) -> Frame:
    """Mid-brightness noise texture that passes the default quality filter"""
    data = rng.integers(60, 200, size=(size, size, 3), dtype=np.uint8)
    return Frame(data, index, fps)


def scene_video(scenes: int = 3, per_scene: int = 30, size: int = 24, seed: int = 7) -> List[Frame]:
    """Static textured scenes joined by hard cuts"""
    rng = np.random.default_rng(seed)
    textures = [textured_frame(rng, size).data for _ in range(scenes)]
    return [Frame(textures[i // per_scene].copy(), i, 30.0) for i in range(scenes * per_scene)]


@pytest.fixture
def config():
    return load_config(environ={})


@pytest.fixture
def fixture_config():
    return load_config(overrides={"clients": {"fixture_dir": str(FIXTURE_DIR)}}, environ={})


@pytest.fixture
def clients(fixture_config):
    factory = ClientFactory(fixture_config, environ={})
    yield factory
    factory.close()


@pytest.fixture
def empty_fixture_clients(tmp_path):
    """Fixture-mode clients over an empty directory: every lookup misses"""
    cfg = load_config(overrides={"clients": {"fixture_dir": str(tmp_path / "fixtures")}}, environ={})
    factory = ClientFactory(cfg, environ={})
    yield factory
    factory.close()


@pytest.fixture
def three_scene_video():
    return scene_video()
