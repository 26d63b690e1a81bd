import hashlib
import itertools
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor

import httpx
import numpy as np
import pytest

from config.config import load_config
from core import client_factory
from core.client_factory import ClientFactory
from core.llm_integration import Summarizer, ZeroShotClassifier
from core.media_services import Transcriber
from core.service_base import FixtureStore, JsonHttpService, RetryPolicy, request_key
from core.vector_services import Embedder, PairScorer, hashed_embedding, overlap_count
from utils.errors import ConfigError, EmptyContent, ServiceError
from video.frames import Frame, load_frames_dir
from tests.conftest import FIXTURE_DIR

ENDPOINT = "http://services.test/v1"


def scripted(*responses):
    """MockTransport handler replaying responses in order; records request bodies"""
    seen = []
    queue = list(responses)

    def handler(request):
        seen.append(request)
        item = queue.pop(0) if len(queue) > 1 else queue[0]
        if isinstance(item, Exception):
            raise item
        status, body = item
        if isinstance(body, (dict, list)):
            return httpx.Response(status, json=body)
        return httpx.Response(status, content=body)

    return handler, seen


def service(handler, retries=3, timeout_s=60.0, token=None, clock=None):
    sleeps = []
    extra = {"clock": clock} if clock else {}
    http = JsonHttpService(
        "summarizer", ENDPOINT, token,
        RetryPolicy(retries=retries, backoff_base_s=0.2, backoff_factor=2.0, timeout_s=timeout_s),
        httpx.Client(transport=httpx.MockTransport(handler)),
        sleep=sleeps.append, rng=random.Random(0), **extra,
    )
    return http, sleeps


# Transport and retries

def test_call_returns_decoded_json():
    handler, seen = scripted((200, {"summary": "ok"}))
    http, sleeps = service(handler, token="secret")
    assert http.call({"content": "x"}) == {"summary": "ok"}
    assert seen[0].headers["Authorization"] == "Bearer secret"
    assert json.loads(seen[0].content) == {"content": "x"}
    assert sleeps == []


@pytest.mark.parametrize("failure", [
    (429, {"error": "slow down"}),
    (503, {"error": "down"}),
    httpx.ReadTimeout("timed out"),
    httpx.ConnectError("refused"),
])
def test_retryable_failures_are_retried(failure):
    handler, seen = scripted(failure, failure, (200, {"summary": "done"}))
    http, sleeps = service(handler)
    assert http.call({"content": "x"}) == {"summary": "done"}
    assert len(seen) == 3
    assert len(sleeps) == 2
    assert 0.0 <= sleeps[0] <= 0.2 and 0.0 <= sleeps[1] <= 0.4


@pytest.mark.parametrize("failure,kind", [
    ((429, {}), "rate_limited"),
    ((500, {}), "unavailable"),
    (httpx.ReadTimeout("timed out"), "timeout"),
])
def test_retries_exhausted(failure, kind):
    handler, seen = scripted(failure)
    http, sleeps = service(handler, retries=2)
    with pytest.raises(ServiceError) as info:
        http.call({})
    assert info.value.kind == kind
    assert info.value.exit_code == 4
    assert len(seen) == 3
    assert len(sleeps) == 2


@pytest.mark.parametrize("response", [(400, {"error": "bad"}), (200, b"not json")])
def test_bad_responses_are_not_retried(response):
    handler, seen = scripted(response)
    http, sleeps = service(handler)
    with pytest.raises(ServiceError) as info:
        http.call({})
    assert info.value.kind == "bad_response"
    assert len(seen) == 1
    assert sleeps == []


def test_deadline_stops_retrying():
    handler, seen = scripted((503, {}))
    ticks = itertools.chain([0.0, 0.0, 5.0], itertools.repeat(5.0))
    http, _ = service(handler, timeout_s=1.0, clock=lambda: next(ticks))
    with pytest.raises(ServiceError) as info:
        http.call({})
    assert info.value.kind == "unavailable"
    assert len(seen) == 1


def test_retry_delay_is_bounded():
    policy = RetryPolicy(backoff_base_s=0.5, backoff_factor=3.0)
    rng = random.Random(11)
    for attempt in range(5):
        for _ in range(50):
            assert 0.0 <= policy.delay(attempt, rng) <= 0.5 * 3.0 ** attempt


def test_service_error_kinds():
    assert ServiceError("timeout").retryable
    assert not ServiceError("bad_response").retryable
    with pytest.raises(ValueError):
        ServiceError("exploded")


# Fixture store

def test_request_key_is_canonical():
    expected = hashlib.sha256(b'{"a":2,"b":"x"}').hexdigest()
    assert request_key({"b": "x", "a": 2}) == expected


def test_fixture_store_record_and_lookup(tmp_path):
    store = FixtureStore(tmp_path, "summarizer")
    request = {"content": "c", "instruction": "i"}
    assert store.lookup(request) is None
    path = store.record(request, {"summary": "s"})
    assert path.parent.name == "summarizer"
    assert store.lookup(request) == {"summary": "s"}
    assert json.loads(path.read_text(encoding="utf-8"))["request"] == request


def test_fixture_store_rejects_malformed_files(tmp_path):
    store = FixtureStore(tmp_path, "ocr")
    path = store.path_for({"k": 1})
    path.parent.mkdir(parents=True)
    path.write_text("{broken", encoding="utf-8")
    with pytest.raises(ServiceError) as info:
        store.lookup({"k": 1})
    assert info.value.kind == "bad_response"


def test_client_needs_exactly_one_backend(tmp_path):
    with pytest.raises(ValueError):
        Summarizer()
    handler, _ = scripted((200, {}))
    http, _ = service(handler)
    with pytest.raises(ValueError):
        Summarizer(FixtureStore(tmp_path, "summarizer"), http)


# Text services

def test_summarizer_fixture_echo(tmp_path):
    summarizer = Summarizer(FixtureStore(tmp_path, "summarizer"), echo_sentences=2)
    assert summarizer.summarize("Summarize.", "One. Two. Three.") == "One. Two."
    with pytest.raises(EmptyContent):
        summarizer.summarize("Summarize.", "   ")


def test_summarizer_fixture_hit(tmp_path):
    store = FixtureStore(tmp_path, "summarizer")
    store.record({"content": "Long text.", "instruction": "Summarize."}, {"summary": " Short. "})
    assert Summarizer(store).summarize("Summarize.", "Long text.") == "Short."


def test_summarizer_live_sends_preset_params():
    handler, seen = scripted((200, {"summary": "A digest."}))
    http, _ = service(handler)
    summary = Summarizer(http=http).summarize("Summarize.", "Text.", preset="paper_summary")
    body = json.loads(seen[0].content)
    assert summary == "A digest."
    assert body["content"] == "Text." and body["max_tokens"] == 300
    assert body["temperature"] == 0.1


def test_summarizer_live_rejects_empty_summary():
    handler, _ = scripted((200, {"summary": "  "}))
    http, _ = service(handler)
    with pytest.raises(ServiceError):
        Summarizer(http=http).summarize("Summarize.", "Text.")


def test_zero_shot_fixture(tmp_path):
    classifier = ZeroShotClassifier(FixtureStore(tmp_path, "zero_shot"))
    label, confidence = classifier.classify("Deep learning with neural networks", ["cooking", "deep learning"])
    assert label == "deep learning"
    assert 0.0 < confidence <= 1.0
    assert classifier.classify("nothing shared", ["a", "b"]) == ("a", 0.0)
    with pytest.raises(ConfigError):
        classifier.classify("text", [])


def test_zero_shot_descriptions(tmp_path):
    classifier = ZeroShotClassifier(FixtureStore(tmp_path, "zero_shot"),
                                    descriptions={"on": "neural networks layers"})
    assert classifier.classify("neural networks have layers", ["off", "on"])[0] == "on"


def test_zero_shot_live_rejects_unknown_label():
    handler, _ = scripted((200, {"label": "other", "confidence": 0.9}))
    http, _ = service(handler)
    with pytest.raises(ServiceError):
        ZeroShotClassifier(http=http).classify("text", ["a", "b"])


# Media services against the sample fixtures

def test_playlist_lookup(clients):
    refs = clients.playlist_search.find("deep learning")
    assert [r.id for r in refs] == ["dl-intro"]
    assert clients.playlist_search.resolve(refs[0].frames).is_dir()
    assert clients.playlist_search.find("knitting") == []


def test_transcriber_sample_audio(clients):
    ref = clients.playlist_search.find("deep learning")[0]
    transcript = clients.transcriber.transcribe(clients.playlist_search.resolve(ref.audio))
    assert transcript.source_language == "en"
    assert [s.start_s for s in transcript.segments] == [0.0, 1.0, 2.0]
    assert transcript.segments[0].text.startswith("Deep learning")


def test_transcriber_empty_audio_makes_no_call(empty_fixture_clients):
    assert empty_fixture_clients.transcriber.transcribe(b"").segments == []


def test_transcriber_missing_fixture_is_unavailable(empty_fixture_clients):
    with pytest.raises(ServiceError) as info:
        empty_fixture_clients.transcriber.transcribe(b"\x00\x01")
    assert info.value.kind == "unavailable"


def test_transcriber_rejects_overlapping_segments():
    segments = [{"start_s": 0.0, "end_s": 2.0, "text": "a"}, {"start_s": 1.0, "end_s": 3.0, "text": "b"}]
    handler, _ = scripted((200, {"segments": segments}))
    http, _ = service(handler)
    with pytest.raises(ServiceError) as info:
        Transcriber(http=http).transcribe(b"audio")
    assert info.value.kind == "bad_response"


def test_ocr_sample_frames(clients):
    frames = load_frames_dir(FIXTURE_DIR / "media" / "dl-intro" / "frames", 30.0)
    texts = [clients.ocr.read(frames[i]) for i in (0, 30, 60)]
    assert texts == ["Deep Learning: An Introduction", "Layers learn features",
                     "Gradient descent and backpropagation"]
    result = clients.ocr.read_result(frames[30])
    assert result.timestamp_s == 1.0


def test_ocr_blank_frame_and_missing_fixture(empty_fixture_clients):
    blank = Frame(np.full((8, 8, 3), 40, dtype=np.uint8))
    assert empty_fixture_clients.ocr.read(blank) == ""
    noisy = Frame(np.random.default_rng(0).integers(0, 256, (8, 8, 3), dtype=np.uint8))
    with pytest.raises(ServiceError):
        empty_fixture_clients.ocr.read(noisy)


def test_web_search_engines(clients):
    results = {engine: clients.web_search.search("deep learning", engine)
               for engine in ("wikipedia", "duckduckgo", "google")}
    assert [len(results[e]) for e in ("wikipedia", "duckduckgo", "google")] == [1, 3, 2]
    assert results["wikipedia"][0].url == "https://en.wikipedia.org/wiki/Deep_learning"
    assert clients.web_search.search("deep learning", "bing") == []


# Vector services

def test_hashed_embedding_properties():
    a = hashed_embedding("neural networks", 128)
    assert np.linalg.norm(a) == pytest.approx(1.0)
    assert np.array_equal(a, hashed_embedding("Neural, networks!", 128))
    assert not np.allclose(a, hashed_embedding("quantum physics", 128))
    assert np.linalg.norm(hashed_embedding("", 16)) == pytest.approx(1.0)


def test_embedder_fixture_and_live(tmp_path):
    embedder = Embedder(FixtureStore(tmp_path, "embedder"), dim=32)
    assert embedder.embed("text").dim == 32
    vectors = embedder.sentence_vectorizer()(["one", "two"])
    assert vectors.shape == (2, 32)

    handler, _ = scripted((200, {"embedding": [0.1, 0.2]}))
    http, _ = service(handler)
    with pytest.raises(ServiceError):
        Embedder(http=http, dim=3).embed("text")


@pytest.mark.parametrize("query,passage,expected", [
    ("deep learning", "deep learning", 2),
    ("deep learning", "quantum physics", 0),
    ("the the cat", "the cat the the", 3),
])
def test_overlap_count(query, passage, expected):
    assert overlap_count(query, passage) == expected


def test_pair_scorer_fixture(tmp_path):
    scorer = PairScorer(FixtureStore(tmp_path, "pair_scorer"))
    assert scorer.score("deep nets", "deep nets") > scorer.score("deep nets", "deep sea") > 0


# Client factory

def test_factory_modes(tmp_path):
    assert ClientFactory(load_config(environ={}), environ={}).mode_for("ocr") == "live"
    cfg = load_config(overrides={"clients": {"fixture_dir": str(tmp_path)}}, environ={})
    factory = ClientFactory(cfg, environ={})
    assert factory.mode_for("ocr") == "fixture"
    assert factory.summarizer is factory.summarizer
    assert factory.summarizer.mode == "fixture"


def test_factory_builds_each_client_once_across_threads(tmp_path, monkeypatch):
    built = []

    class SlowScorer(PairScorer):
        def __init__(self, **kwargs):
            built.append(kwargs)
            time.sleep(0.02)
            super().__init__(**kwargs)

    monkeypatch.setattr(client_factory, "PairScorer", SlowScorer)
    factory = ClientFactory(load_config(overrides={"clients": {"fixture_dir": str(tmp_path)}}, environ={}),
                            environ={})
    with ThreadPoolExecutor(max_workers=8) as pool:
        scorers = list(pool.map(lambda _: factory.pair_scorer, range(32)))
    assert len(built) == 1
    assert all(scorer is scorers[0] for scorer in scorers)


def test_factory_live_without_endpoint():
    factory = ClientFactory(load_config(overrides={"clients": {"mode": "live"}}, environ={}), environ={})
    with pytest.raises(ConfigError):
        factory.summarizer


def test_factory_live_endpoint_and_token():
    handler, seen = scripted((200, {"summary": "Live."}))
    environ = {"CONVERGEX_ENDPOINT_SUMMARIZER": ENDPOINT, "CONVERGEX_TOKEN_SUMMARIZER": "t0k"}
    cfg = load_config(overrides={"clients": {"mode": "live"}}, environ={})
    factory = ClientFactory(cfg, environ=environ,
                            http_client=httpx.Client(transport=httpx.MockTransport(handler)),
                            sleep=lambda _: None)
    assert factory.endpoint_for("summarizer") == ENDPOINT
    assert factory.summarizer.summarize("Summarize.", "Text.") == "Live."
    assert seen[0].headers["Authorization"] == "Bearer t0k"
    factory.close()


def test_factory_endpoint_from_config():
    cfg = load_config(overrides={"clients": {"endpoints": {"ocr": "http://ocr.test"}}}, environ={})
    assert ClientFactory(cfg, environ={}).endpoint_for("ocr") == "http://ocr.test"
