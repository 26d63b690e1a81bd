"""
Multi-Source Pipeline

End-to-end run for one research query: every requested source agent
produces its synopsis, the synopses converge into the final summary, and
the digest, its report and the keyframe manifests of the videos are written
together or not at all.
"""

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Mapping, Optional, Sequence

from agents.arxiv_agent import ArxivAgent
from agents.base_agent import SourceAgent
from agents.web_agent import WebAgent
from agents.youtube_agent import YouTubeAgent
from config.config import KNOWN_SOURCES
from core.client_factory import ClientFactory
from evaluation.report import render_markdown
from summarization.convergence import FusedDigest, final_digest
from summarization.synopsis import SourceSummary
from utils.errors import ConfigError
from utils.state_manager import StateManager, canonical_json

logger = logging.getLogger("convergex.commands")


def parse_sources(sources: Sequence[str]) -> List[str]:
    """Validated source names, duplicates dropped, in canonical order"""
    requested = [s.strip() for s in sources if s.strip()]
    unknown = sorted({s for s in requested if s not in KNOWN_SOURCES})
    if unknown:
        raise ConfigError(f"Unknown source(s): {unknown}; choose from {list(KNOWN_SOURCES)}")
    if not requested:
        raise ConfigError("no sources requested")
    return sorted(set(requested))


class MultiSourcePipeline:
    def __init__(self, config: Mapping[str, Any], clients: ClientFactory,
                 corpus_path: Optional[str] = None, index_path: Optional[str] = None):
        self.config = config
        self.clients = clients
        self.corpus_path = corpus_path
        self.index_path = index_path
        self.agents: Dict[str, SourceAgent] = {}
        self.summaries: List[SourceSummary] = []

    def _agent(self, source: str) -> SourceAgent:
        if source == "youtube":
            return YouTubeAgent(self.clients, self.config)
        if source == "arxiv":
            return ArxivAgent(self.clients, self.config, self.corpus_path, self.index_path)
        return WebAgent(self.clients, self.config)

    def synopses(self, query: str, sources: Sequence[str]) -> List[SourceSummary]:
        self.agents = {source: self._agent(source) for source in sources}
        workers = min(len(sources), self.config["convergence"]["max_workers"])
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: self.agents[s].run(query), sources))
        return [summary for summary in results if summary is not None]

    def run(self, query: str, sources: Sequence[str]) -> Optional[FusedDigest]:
        """
        Returns:
            FusedDigest, or None when fewer than two sources found anything
        """
        summaries = self.synopses(query, sources)
        if len(summaries) < 2:
            logger.warning(f"too few sources with content query={query!r} sources={len(summaries)}")
            return None

        conv, metrics = self.config["convergence"], self.config["metrics"]
        vectorizer = None
        if conv["similarity"] == "embedding" or metrics["coherence_vectorizer"] == "embedding":
            vectorizer = self.clients.embedder.sentence_vectorizer()
        summarizer = self.clients.summarizer if conv["engine"] == "service" else None
        digest = final_digest(summaries, query, self.config, summarizer, vectorizer)
        self.summaries = summaries
        return digest

    def digest_document(self, query: str, digest: FusedDigest) -> Dict[str, Any]:
        document = digest.to_dict()
        document["query"] = query
        document["synopses"] = {s.source_id: s.text for s in self.summaries}
        return document

    def keyframe_manifests(self) -> Dict[str, Any]:
        agent = self.agents.get("youtube")
        return agent.artifacts.get("keyframes", {}) if agent is not None else {}


def cmd_pipeline(query: str, sources: Sequence[str], out_dir: Optional[str],
                 config: Mapping[str, Any], clients: ClientFactory,
                 corpus_path: Optional[str] = None, index_path: Optional[str] = None) -> int:
    """
    Run the pipeline and write digest.json, report.md and
    keyframes/<video_id>/manifest.json.

    Returns:
        0 on success, 3 when fewer than two sources produced content
    """
    if not query.strip():
        raise ConfigError("the query is empty")
    pipeline = MultiSourcePipeline(config, clients, corpus_path, index_path)
    digest = pipeline.run(query, parse_sources(sources))
    if digest is None:
        return 3

    document = pipeline.digest_document(query, digest)
    if out_dir is None:
        sys.stdout.write(canonical_json(document))
        return 0

    with StateManager(out_dir) as state:
        state.save_json("digest.json", document)
        state.save_text("report.md", render_markdown(digest.report, title=query))
        for video_id, manifest in pipeline.keyframe_manifests().items():
            state.save_json(f"keyframes/{video_id}/manifest.json", manifest)
    return 0
