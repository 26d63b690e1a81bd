"""
Base Source Agent

Every source (video playlists, papers, web pages) follows the same shape:
gather item texts for a query, then condense them into one synopsis with
the source's summarizer presets. Subclasses implement gather().
"""

import logging
from typing import Any, Dict, List, Mapping, Optional

from core.client_factory import ClientFactory
from summarization.synopsis import SourceSummary, per_source_synopsis


class SourceAgent:
    """Base agent class that the per-source agents inherit from"""

    kind = ""

    def __init__(self, clients: ClientFactory, config: Mapping[str, Any]):
        self.clients = clients
        self.config = config
        self.logger = logging.getLogger(f"convergex.agents.{self.kind}")
        # per-item artifacts a command may write next to the digest
        self.artifacts: Dict[str, Any] = {}

    def gather(self, query: str) -> List[str]:
        """Collect the texts of this source for a query - implemented by subclasses"""
        raise NotImplementedError("Subclasses must implement gather()")

    def run(self, query: str) -> Optional[SourceSummary]:
        """
        Gather and summarize.

        Returns:
            The source synopsis, or None when the source found nothing
        """
        texts = [t for t in self.gather(query) if t.strip()]
        if not texts:
            self.logger.warning(f"source found nothing source={self.kind} query={query!r}")
            return None
        return per_source_synopsis(
            self.kind, texts, self.clients.summarizer,
            source_id=self.kind,
            max_workers=self.config["convergence"]["max_workers"],
            policy=self.config["tokenizer"]["policy"],
        )
