"""
YouTube Agent

Playlist flow: find a playlist by keywords, then for every video transcribe
the audio, pick keyframes, read their on-screen text and fuse it into the
transcript timeline. Videos run concurrently and come back in playlist order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Tuple

from agents.base_agent import SourceAgent
from core.media_services import VideoRef
from summarization.synopsis import fuse_transcript_ocr
from video.frames import load_frames_dir
from video.keyframes import KeyframeResult, select_keyframes


class YouTubeAgent(SourceAgent):
    kind = "youtube"

    def process_video(self, ref: VideoRef) -> Tuple[str, KeyframeResult]:
        """
        Timeline text of one video.

        Returns:
            (fused transcript and screen text, keyframe result)
        """
        clients_cfg = self.config["clients"]
        playlist = self.clients.playlist_search

        transcript = self.clients.transcriber.transcribe(playlist.resolve(ref.audio), clients_cfg["target_language"])
        self.logger.info(f"video={ref.id} segments={len(transcript.segments)} "
                         f"detected_language={transcript.source_language}")

        frames = load_frames_dir(playlist.resolve(ref.frames), self.config["videokey"]["fps"])
        result = select_keyframes(frames, self.config["videokey"], self.config["cluster"])
        by_index = {frame.index: frame for frame in frames}
        ocr = [self.clients.ocr.read_result(by_index[k.frame_index]) for k in result.keyframes]

        return fuse_transcript_ocr(transcript.segments, ocr), result

    def gather(self, query: str) -> List[str]:
        videos = self.clients.playlist_search.find(query)
        self.logger.info(f"playlist videos={len(videos)} query={query!r}")
        if not videos:
            return []

        with ThreadPoolExecutor(max_workers=self.config["convergence"]["max_workers"]) as pool:
            processed = list(pool.map(self.process_video, videos))

        manifests = {}
        texts = []
        for ref, (text, result) in zip(videos, processed):
            manifests[ref.id] = {"title": ref.title, "keyframes": result.manifest(), "warnings": result.warnings}
            texts.append(text)
        self.artifacts["keyframes"] = manifests
        return texts

