"""
Media Services

Clients for speech transcription, on-screen text recognition, playlist
lookup and web search. Fixture requests are keyed by content hashes so a
fixture directory fully determines every answer.
"""

import base64
import hashlib
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Union

import numpy as np
from PIL import Image

from config.service_params import get_service_params
from core.service_base import FixtureStore, JsonHttpService, ServiceClient
from utils.errors import ServiceError
from video.frames import Frame

logger = logging.getLogger("convergex.clients")


@dataclass(frozen=True)
class TranscriptSegment:
    start_s: float
    end_s: float
    text: str
    language: str = "en"


@dataclass
class Transcript:
    """Segments in the target language plus the detected source language"""
    source_language: str
    segments: List[TranscriptSegment] = field(default_factory=list)


@dataclass(frozen=True)
class OcrResult:
    frame_index: int
    timestamp_s: float
    text: str


@dataclass(frozen=True)
class VideoRef:
    id: str
    title: str
    audio: str
    frames: str


@dataclass(frozen=True)
class WebPage:
    title: str
    url: str
    snippet: str = ""
    body: str = ""

    @property
    def classify_text(self) -> str:
        return f"{self.title}\n{self.snippet}".strip()

    def to_dict(self):
        return {"title": self.title, "url": self.url, "snippet": self.snippet, "body": self.body}


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


class Transcriber(ServiceClient):
    service = "transcriber"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None):
        super().__init__(fixtures, http, get_service_params(self.service))

    def transcribe(self, audio: Union[str, Path, bytes], target_language: str = "en") -> Transcript:
        """
        Transcribe audio into the target language.

        Args:
            audio: Audio file path or raw bytes
            target_language: BCP-47 tag of the output text

        Returns:
            Transcript with ordered, non-overlapping segments; empty audio
            gives an empty transcript without a service call

        Raises:
            ServiceError: unavailable when no fixture exists, bad_response on
                malformed segments, or any live failure
        """
        data = audio if isinstance(audio, bytes) else Path(audio).read_bytes()
        if not data:
            return Transcript(target_language, [])

        request = {"audio_sha256": hashlib.sha256(data).hexdigest(), "target_language": target_language}
        extra = {"audio_base64": base64.b64encode(data).decode("ascii")} if self.mode == "live" else None
        response = self._fetch("transcribe", request, extra)
        if response is None:
            raise ServiceError("unavailable", f"no transcript fixture for audio {request['audio_sha256'][:12]}",
                               self.service)

        body = self._expect_dict(response, "segments")
        source_language = body.get("language", target_language)
        if not isinstance(source_language, str):
            raise self._bad("language must be a string")
        segments = self._parse_segments(body["segments"], target_language)
        logger.info(f"transcribed segments={len(segments)} source_language={source_language} "
                    f"target_language={target_language}")
        return Transcript(source_language, segments)

    def _parse_segments(self, raw: Any, language: str) -> List[TranscriptSegment]:
        if not isinstance(raw, list):
            raise self._bad("segments must be a list")
        segments: List[TranscriptSegment] = []
        previous_end = 0.0
        for position, item in enumerate(raw):
            if not isinstance(item, dict) or not isinstance(item.get("text"), str):
                raise self._bad(f"segment {position} is malformed")
            start, end = item.get("start_s"), item.get("end_s")
            if not (_is_number(start) and _is_number(end)) or not 0 <= start < end:
                raise self._bad(f"segment {position} has an invalid time span")
            if start < previous_end:
                raise self._bad(f"segment {position} overlaps or precedes the previous one")
            segments.append(TranscriptSegment(float(start), float(end), item["text"], language))
            previous_end = end
        return segments


class Ocr(ServiceClient):
    """Reads on-screen text; a frame of a single color reads as empty text"""

    service = "ocr"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None):
        super().__init__(fixtures, http, get_service_params(self.service))

    def read(self, frame: Frame) -> str:
        pixels = frame.data
        if np.all(pixels == pixels[0, 0]):
            return ""
        request = {
            "height": frame.height,
            "pixels_sha256": hashlib.sha256(np.ascontiguousarray(pixels).tobytes()).hexdigest(),
            "width": frame.width,
        }
        extra = {"image_base64": _png_base64(pixels)} if self.mode == "live" else None
        response = self._fetch("read", request, extra)
        if response is None:
            raise ServiceError("unavailable", f"no OCR fixture for frame {frame.index}", self.service)
        text = self._expect_dict(response, "text")["text"]
        if not isinstance(text, str):
            raise self._bad("text must be a string")
        return text.strip()

    def read_result(self, frame: Frame) -> OcrResult:
        return OcrResult(frame.index, frame.timestamp, self.read(frame))


def _png_base64(pixels: np.ndarray) -> str:
    buffer = io.BytesIO()
    Image.fromarray(pixels).save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


class PlaylistSearch(ServiceClient):
    """
    Keyword lookup of a playlist. In fixture mode the audio and frames
    references are relative to the fixture directory.
    """

    service = "playlist_search"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None):
        super().__init__(fixtures, http, get_service_params(self.service))

    def find(self, keywords: str) -> List[VideoRef]:
        response = self._fetch("find", {"keywords": keywords})
        if response is None:
            logger.warning(f"no playlist found keywords={keywords!r}")
            return []
        videos = self._expect_dict(response, "videos")["videos"]
        if not isinstance(videos, list):
            raise self._bad("videos must be a list")
        refs = []
        for position, item in enumerate(videos):
            names = ("id", "title", "audio", "frames")
            if not isinstance(item, dict) or not all(isinstance(item.get(n), str) for n in names):
                raise self._bad(f"playlist entry {position} is malformed")
            refs.append(VideoRef(item["id"], item["title"], item["audio"], item["frames"]))
        return refs

    def resolve(self, ref: str) -> Path:
        if self.fixtures is not None:
            return self.fixtures.root / ref
        return Path(ref)


class WebSearch(ServiceClient):
    service = "web_search"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None):
        super().__init__(fixtures, http, get_service_params(self.service))

    def search(self, query: str, engine: str = "default") -> List[WebPage]:
        """
        Pages for a query from one search engine; an unknown query gives [].

        Raises:
            ServiceError: bad_response on malformed pages, or any live failure
        """
        response = self._fetch("search", {"engine": engine, "query": query})
        if response is None:
            return []
        pages = self._expect_dict(response, "pages")["pages"]
        if not isinstance(pages, list):
            raise self._bad("pages must be a list")
        return [self._parse_page(position, item) for position, item in enumerate(pages)]

    def _parse_page(self, position: int, item: Any) -> WebPage:
        if not isinstance(item, dict) or not isinstance(item.get("title"), str) \
                or not isinstance(item.get("url"), str):
            raise self._bad(f"page {position} is malformed")
        snippet, body = item.get("snippet", ""), item.get("body", "")
        if not isinstance(snippet, str) or not isinstance(body, str):
            raise self._bad(f"page {position} has non-text snippet or body")
        return WebPage(item["title"], item["url"], snippet, body)
