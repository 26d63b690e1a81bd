# scenarios/paper_search.py

import logging
import sys
from typing import Any, Dict, List, Mapping, Optional

from core.client_factory import ClientFactory
from knowledge.embedding import load_index, save_index, search
from knowledge.retrieval import embed_corpus, hit_rows, ingest_corpus, rerank_head
from utils.errors import ConfigError
from utils.state_manager import canonical_json

logger = logging.getLogger("convergex.commands")


class PaperSearch:
    """Builds and queries the paper index of a JSON-Lines corpus"""

    def __init__(self, config: Mapping[str, Any], clients: ClientFactory):
        self.config = config
        self.clients = clients

    def build(self, corpus_path: str, index_path: str) -> int:
        docs = ingest_corpus(corpus_path)
        index = embed_corpus(docs, self.clients.embedder)
        save_index(index, index_path)
        return index.count

    def search(self, corpus_path: str, index_path: str, query: str, k: Optional[int] = None) -> List[Dict[str, Any]]:
        """
        Dense search, pair-scorer re-ranking of the first rerank_n hits.

        Returns:
            Rows {id, score, rank, title, url}
        """
        retrieval = self.config["retrieval"]
        k = retrieval["k"] if k is None else k
        if k < 1:
            raise ConfigError(f"-k must be >= 1, got {k}")
        docs = {d.id: d for d in ingest_corpus(corpus_path)}
        index = load_index(index_path)
        hits = search(index, self.clients.embedder.embed(query), k)

        ranked = rerank_head(query, hits, docs, self.clients.pair_scorer, retrieval["rerank_n"])
        return hit_rows(ranked, docs)


def cmd_index_build(corpus_path: str, index_path: str, config: Mapping[str, Any],
                    clients: ClientFactory) -> int:
    count = PaperSearch(config, clients).build(corpus_path, index_path)
    logger.info(f"indexed documents={count} index={index_path}")
    return 0


def cmd_index_search(corpus_path: str, index_path: str, query: str, k: Optional[int],
                     config: Mapping[str, Any], clients: ClientFactory) -> int:
    """Print hits as JSON lines; exit 3 when nothing matches"""
    rows = PaperSearch(config, clients).search(corpus_path, index_path, query, k)
    for row in rows:
        sys.stdout.write(canonical_json(row, indent=None) + "\n")
    return 0 if rows else 3
