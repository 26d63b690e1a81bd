"""
Convergence

Fuses the source synopses into one final summary. The default engine pools
every source sentence and selects greedily by maximal marginal relevance:
relevance to the query against similarity to what is already selected,
until the token budget is spent. The budget is capped at a share of the
pooled source tokens. The service engine asks the Summarizer for an
abstractive fusion and attributes each output sentence to its closest
source sentence.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.prompts.summarizer_presets import get_preset
from evaluation.metrics import MetricReport, metric_table
from summarization.synopsis import SourceSummary
from utils.errors import ConfigError, EmptyPool, TooFewSources
from utils.text_processing import (TokenDistribution, cosine_similarity, normalized_key,
                                   split_sentences, term_distribution, tf_vector, tokenize)

logger = logging.getLogger("convergex.convergence")

FINAL_ID = "final"
TERMINATORS = (".", "!", "?")

SentenceVectorizer = Callable[[Sequence[str]], np.ndarray]


@dataclass(frozen=True)
class SentenceCandidate:
    source_id: str
    sentence_index: int
    text: str
    tokens: Tuple[str, ...]

    @property
    def order_key(self) -> Tuple[str, int]:
        return self.source_id, self.sentence_index


@dataclass
class FusedDigest:
    final_text: str
    provenance: List[Tuple[str, int]] = field(default_factory=list)
    report: Optional[MetricReport] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "final_text": self.final_text,
            "provenance": [[source_id, index] for source_id, index in self.provenance],
            "report": self.report.to_dict() if self.report is not None else None,
        }


def sentence_pool(summaries: Sequence[SourceSummary], policy: str = "default",
                  abbreviations: Optional[Sequence[str]] = None) -> List[SentenceCandidate]:
    """Every sentence of every summary, ordered by (source_id, sentence_index)"""
    pool = []
    for summary in sorted(summaries, key=lambda s: s.source_id):
        for index, sentence in enumerate(split_sentences(summary.text, abbreviations).sentences):
            pool.append(SentenceCandidate(summary.source_id, index, sentence,
                                          tokenize(sentence, policy).tokens))
    return pool


def _cosine_matrix(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = vectors / safe[:, None]
    unit[norms == 0.0] = 0.0
    return unit @ unit.T


def mmr_select(candidates: Sequence[SentenceCandidate], query_dist: TokenDistribution,
               lam: float = 0.7, budget: int = 400,
               vectorizer: Optional[SentenceVectorizer] = None,
               query_text: Optional[str] = None) -> List[SentenceCandidate]:
    """
    Greedy maximal marginal relevance selection.

    Each step picks the candidate maximizing
    lam * sim(sentence, query) - (1 - lam) * max sim(sentence, selected),
    with term-frequency cosine similarity unless a vectorizer is given.
    Candidates repeating a selected sentence (same tokens) and candidates
    without tokens are never picked. Selection stops once the selected
    sentences hold budget tokens or nothing selectable is left; the last
    sentence may cross the budget.

    Args:
        candidates: Sentence pool
        query_dist: Query term distribution (relevance target)
        lam: Relevance weight in [0, 1]
        budget: Token budget (>= 1)
        vectorizer: Optional sentence vectorizer replacing term frequencies
        query_text: Query text for the vectorizer

    Returns:
        Selected candidates in selection order

    Raises:
        EmptyPool: if there are no candidates
    """
    if not candidates:
        raise EmptyPool("no sentences to select from")
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}")
    if budget < 1:
        raise ConfigError(f"budget must be >= 1, got {budget}")

    pool = sorted(candidates, key=lambda c: c.order_key)
    if vectorizer is not None and query_text is not None:
        vectors = np.asarray(vectorizer([c.text for c in pool] + [query_text]), dtype=np.float64)
        similarity = _cosine_matrix(vectors)
        relevance = similarity[-1, :-1]
        pairwise = similarity[:-1, :-1]
    else:
        tf = [tf_vector(c.tokens) for c in pool]
        relevance = np.array([cosine_similarity(v, query_dist.mass) for v in tf])
        pairwise = None

    def pair_sim(i: int, j: int) -> float:
        if pairwise is not None:
            return float(pairwise[i, j])
        return cosine_similarity(tf[i], tf[j])

    keys = [normalized_key(c.text) for c in pool]
    max_sim = np.zeros(len(pool))
    chosen: List[int] = []
    chosen_keys = set()
    used = 0
    while used < budget:
        best, best_score = None, -np.inf
        for i, candidate in enumerate(pool):
            if not candidate.tokens or keys[i] in chosen_keys or i in chosen:
                continue
            score = lam * relevance[i] - (1.0 - lam) * max_sim[i]
            if score > best_score:
                best, best_score = i, score
        if best is None:
            break
        chosen.append(best)
        chosen_keys.add(keys[best])
        used += len(pool[best].tokens)
        for i in range(len(pool)):
            max_sim[i] = max(max_sim[i], pair_sim(i, best))

    logger.debug(f"mmr selected={len(chosen)} pool={len(pool)} tokens={used} budget={budget}")
    return [pool[i] for i in chosen]


def effective_budget(pool: Sequence[SentenceCandidate], budget: int, share: float = 1.0) -> int:
    """The token budget capped at share of the pooled tokens, never below one token"""
    pooled = sum(len(c.tokens) for c in pool)
    return max(1, min(budget, math.ceil(share * pooled)))


def _terminated(sentence: str) -> str:
    sentence = sentence.strip()
    return sentence if sentence.endswith(TERMINATORS) else f"{sentence}."


def attribute_sentences(sentences: Sequence[str], pool: Sequence[SentenceCandidate],
                        policy: str = "default") -> List[Tuple[str, int]]:
    """Map each sentence to its most similar pool sentence, ties to the lowest (source_id, index)"""
    ordered = sorted(pool, key=lambda c: c.order_key)
    vectors = [tf_vector(c.tokens) for c in ordered]
    provenance = []
    for sentence in sentences:
        target = tf_vector(tokenize(sentence, policy).tokens)
        best, best_score = ordered[0], -1.0
        for candidate, vector in zip(ordered, vectors):
            score = cosine_similarity(target, vector)
            if score > best_score:
                best, best_score = candidate, score
        provenance.append(best.order_key)
    return provenance


def _check_sources(summaries: Sequence[SourceSummary]) -> None:
    if len(summaries) < 2:
        raise TooFewSources(f"final digest needs at least 2 source summaries, got {len(summaries)}")
    ids = [s.source_id for s in summaries]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"source ids must be unique, got {ids}")
    if FINAL_ID in ids:
        raise ConfigError(f"{FINAL_ID!r} is reserved for the fused summary")


def final_digest(summaries: Sequence[SourceSummary], query: str, cfg: Mapping[str, Any],
                 summarizer=None, vectorizer: Optional[SentenceVectorizer] = None) -> FusedDigest:
    """
    Fuse source summaries into the final summary and evaluate it.

    Args:
        summaries: At least two source summaries with distinct ids
        query: Research query; an empty query falls back to the pooled text
        cfg: Full configuration (convergence, metrics, tokenizer sections)
        summarizer: Summarizer client, needed by the service engine
        vectorizer: Sentence vectorizer for embedding similarity

    Returns:
        FusedDigest whose report compares the final summary with every source

    Raises:
        TooFewSources: with fewer than two summaries
    """
    _check_sources(summaries)
    conv, tok = cfg["convergence"], cfg["tokenizer"]
    policy, abbreviations = tok["policy"], tok["abbreviations"]

    pool = sentence_pool(summaries, policy, abbreviations)
    if not pool:
        raise EmptyPool("the source summaries hold no sentences")
    query_tokens = tokenize(query, policy, "query")
    if len(query_tokens) == 0:
        logger.warning("query has no tokens; using the pooled text as relevance target")
        query_tokens = tokenize(" ".join(c.text for c in pool), policy, "query")
    query_dist = term_distribution(query_tokens)

    use_embeddings = conv["similarity"] == "embedding"
    if use_embeddings and vectorizer is None:
        raise ConfigError("convergence.similarity is embedding but no embedder was provided")

    if conv["engine"] == "service":
        if summarizer is None:
            raise ConfigError("convergence.engine is service but no summarizer was provided")
        pooled = "\n\n".join(s.text for s in sorted(summaries, key=lambda s: s.source_id))
        fused = summarizer.summarize(get_preset("final_fusion"), pooled, "final_fusion")
        sentences = [_terminated(s) for s in split_sentences(fused, abbreviations).sentences]
        provenance = attribute_sentences(sentences, pool, policy)
    else:
        budget = effective_budget(pool, conv["budget"], conv["budget_share"])
        selected = mmr_select(pool, query_dist, conv["lambda"], budget,
                              vectorizer if use_embeddings else None, query if use_embeddings else None)
        sentences = [_terminated(c.text) for c in selected]
        provenance = [c.order_key for c in selected]

    final_text = " ".join(sentences)
    texts = {FINAL_ID: final_text}
    texts.update({s.source_id: s.text for s in summaries})
    metrics = cfg["metrics"]
    coherence_vectorizer = vectorizer if metrics["coherence_vectorizer"] == "embedding" else None
    report = metric_table(texts, FINAL_ID, policy, metrics["epsilon"], coherence_vectorizer, abbreviations)
    logger.info(f"final digest engine={conv['engine']} sentences={len(sentences)} sources={len(summaries)}")
    return FusedDigest(final_text, provenance, report)
