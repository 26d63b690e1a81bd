"""
Vector Services

Embedder and pair-scorer clients. The Embedder fixture is a feature-hashing
pseudo-embedding: every token owns a standard normal vector drawn from a
generator seeded by the token's SHA-256, a text is the count-weighted sum of
its token vectors, scaled to unit norm.
"""

import hashlib
import logging
from collections import Counter
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from config.service_params import get_service_params
from core.service_base import FixtureStore, JsonHttpService, ServiceClient
from knowledge.embedding import Embedding
from utils.text_processing import tokenize

logger = logging.getLogger("convergex.clients")


def _seed(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "little")


@lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int) -> np.ndarray:
    vector = np.random.default_rng(_seed(token.encode("utf-8"))).standard_normal(dim)
    vector.setflags(write=False)
    return vector


def hashed_embedding(text: str, dim: int = 384) -> np.ndarray:
    """Deterministic unit-norm vector for a text"""
    counts = Counter(tokenize(text).tokens)
    if counts:
        vector = np.zeros(dim, dtype=np.float64)
        for token in sorted(counts):
            vector += counts[token] * _token_vector(token, dim)
    else:
        vector = np.random.default_rng(_seed(text.encode("utf-8"))).standard_normal(dim)
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        vector = np.random.default_rng(_seed(text.encode("utf-8"))).standard_normal(dim)
        norm = np.linalg.norm(vector)
    return vector / norm


class Embedder(ServiceClient):
    service = "embedder"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None,
                 dim: int = 384):
        super().__init__(fixtures, http, get_service_params(self.service))
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def embed(self, text: str) -> Embedding:
        """
        Raises:
            ServiceError: bad_response if a vector has the wrong length or
                non-finite values
        """
        response = self._fetch("embed", {"dim": self.dim, "text": text})
        if response is None:
            return Embedding(hashed_embedding(text, self.dim))
        values = self._expect_dict(response, "embedding")["embedding"]
        try:
            vector = np.asarray(values, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise self._bad(f"embedding is not numeric: {e}") from e
        if vector.shape != (self.dim,) or not np.all(np.isfinite(vector)):
            raise self._bad(f"embedding must hold {self.dim} finite values")
        return Embedding(vector)

    def sentence_vectorizer(self) -> Callable[[Sequence[str]], np.ndarray]:
        """Sentence vectorizer for coherence and selection similarity"""
        def vectorize(sentences: Sequence[str]) -> np.ndarray:
            if not sentences:
                return np.zeros((0, self.dim))
            return np.vstack([self.embed(s).values for s in sentences])
        return vectorize


class PairScorer(ServiceClient):
    """
    Relevance of a passage to a query; higher is more relevant. The fixture
    counts shared tokens, each token counted at most as often as it occurs
    in both texts.
    """

    service = "pair_scorer"

    def __init__(self, fixtures: Optional[FixtureStore] = None, http: Optional[JsonHttpService] = None):
        super().__init__(fixtures, http, get_service_params(self.service))

    def score(self, query: str, passage: str) -> float:
        response = self._fetch("score", {"passage": passage, "query": query})
        if response is None:
            return float(overlap_count(query, passage))
        value = self._expect_dict(response, "score")["score"]
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not np.isfinite(value):
            raise self._bad("score must be a finite number")
        return float(value)


def overlap_count(query: str, passage: str) -> int:
    shared = Counter(tokenize(query).tokens) & Counter(tokenize(passage).tokens)
    return sum(shared.values())
