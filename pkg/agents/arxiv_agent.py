"""
arXiv Agent

Paper flow: dense search over the corpus, re-ranking of the top hits with
the pair scorer, then two summaries per paper. The extractive one selects
the paper's own sentences by relevance to the query; the RAG one answers
from the document chunks closest to the query. Both are joined into the
text the paper contributes to the source synopsis.
"""

from pathlib import Path
from typing import Dict, List, Optional

from agents.base_agent import SourceAgent
from config.prompts.summarizer_presets import get_preset
from knowledge.embedding import SearchHit, VectorIndex, load_index, search
from knowledge.retrieval import (DocRecord, build_chunk_store, embed_corpus, ingest_corpus,
                                 rerank_head, retrieve_chunks)
from summarization.convergence import SentenceCandidate, mmr_select
from utils.errors import ConfigError
from utils.text_processing import split_sentences, term_distribution, tokenize


class ArxivAgent(SourceAgent):
    kind = "arxiv"

    def __init__(self, clients, config, corpus_path: Optional[str] = None, index_path: Optional[str] = None):
        super().__init__(clients, config)
        retrieval = config["retrieval"]
        self.corpus_path = corpus_path or retrieval["corpus_path"]
        self.index_path = index_path or retrieval["index_path"]
        self._docs: List[DocRecord] = []
        self._by_id: Dict[str, DocRecord] = {}

    def _index(self, docs: List[DocRecord]) -> VectorIndex:
        if self.index_path and Path(self.index_path).is_file():
            return load_index(self.index_path)
        return embed_corpus(docs, self.clients.embedder)

    def find_papers(self, query: str) -> List[SearchHit]:
        """Top-k hits with the first rerank_n re-scored by the pair scorer"""
        retrieval = self.config["retrieval"]
        docs = self._docs
        if not docs:
            return []
        hits = search(self._index(docs), self.clients.embedder.embed(query), retrieval["k"])
        return rerank_head(query, hits, self._by_id, self.clients.pair_scorer, retrieval["rerank_n"])

    def extractive_summary(self, doc: DocRecord, query: str) -> str:
        policy = self.config["tokenizer"]["policy"]
        abbreviations = self.config["tokenizer"]["abbreviations"]
        sentences = split_sentences(doc.document, abbreviations).sentences
        pool = [SentenceCandidate(doc.id, i, s, tokenize(s, policy).tokens) for i, s in enumerate(sentences)]
        pool = [c for c in pool if c.tokens]
        if not pool:
            return ""
        query_tokens = tokenize(query, policy)
        if len(query_tokens) == 0:
            query_tokens = tokenize(doc.embed_text, policy)
        conv = self.config["convergence"]
        selected = mmr_select(pool, term_distribution(query_tokens), conv["lambda"],
                              self.config["retrieval"]["extract_budget"])
        # emitted in document order
        return " ".join(c.text for c in sorted(selected, key=lambda c: c.sentence_index))

    def rag_answer(self, doc: DocRecord, query: str) -> str:
        retrieval = self.config["retrieval"]
        embedder = self.clients.embedder
        store = build_chunk_store(doc, embedder, retrieval["chunk_size"], retrieval["chunk_overlap"])
        chunks = retrieve_chunks(store, query, embedder, retrieval["rag_top_k"])
        if not chunks:
            return ""
        instruction = f"{get_preset('rag_answer')}\n\nQuery: {query}"
        return self.clients.summarizer.summarize(instruction, "\n\n".join(c.text for c in chunks), "rag_answer")

    def gather(self, query: str) -> List[str]:
        if not self.corpus_path:
            raise ConfigError("the arxiv source needs retrieval.corpus_path or --corpus")
        self._docs = ingest_corpus(self.corpus_path)
        self._by_id = {d.id: d for d in self._docs}

        hits = self.find_papers(query)
        self.artifacts["papers"] = [
            {"id": h.id, "rank": h.rank, "score": h.score, "title": self._by_id[h.id].title}
            for h in hits
        ]
        self.logger.info(f"papers={len(hits)} query={query!r}")

        texts = []
        for hit in hits:
            doc = self._by_id[hit.id]
            parts = [self.extractive_summary(doc, query), self.rag_answer(doc, query)]
            texts.append(" ".join(p for p in parts if p))
        return texts
