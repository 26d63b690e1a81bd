"""
Summary Evaluation Metrics

Entropy, KL divergence, redundancy against a pool of summaries, adjacent
sentence coherence, type-token ratio, ROUGE-N and ROUGE-L, and the
metric_table that assembles them into a MetricReport.

All logarithms are base 2, so entropy and KL are reported in bits.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ConvergexError, EmptySequence, TooFewSentences, TooShort
from utils.text_processing import (
    SentenceSeq, TokenDistribution, TokenSeq, cosine_similarity, smooth_union,
    split_sentences, term_distribution, tf_vector, tokenize,
)

logger = logging.getLogger("convergex.metrics")

DEFAULT_EPSILON = 1e-9

# Maps a list of sentences to one vector per sentence (rows)
SentenceVectorizer = Callable[[Sequence[str]], np.ndarray]


@dataclass(frozen=True)
class RougeScore:
    recall: float
    precision: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, candidate_total: int, reference_total: int) -> "RougeScore":
        recall = overlap / reference_total if reference_total else 0.0
        precision = overlap / candidate_total if candidate_total else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(recall, precision, f1)

    def to_dict(self) -> Dict[str, float]:
        return {"recall": self.recall, "precision": self.precision, "f1": self.f1}


@dataclass(frozen=True)
class SourceMetrics:
    entropy: Optional[float]
    ttr: Optional[float]
    redundancy: Optional[float]

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {"entropy": self.entropy, "ttr": self.ttr, "redundancy": self.redundancy}


@dataclass
class MetricReport:
    """
    Every metric for one set of summaries. Cells that failed are None
    (absent), never zero. `order` lists source ids with the final summary first.
    """
    order: List[str]
    final_id: str
    per_source: Dict[str, SourceMetrics] = field(default_factory=dict)
    kl: Dict[Tuple[str, str], Optional[float]] = field(default_factory=dict)
    coherence: Dict[str, Optional[float]] = field(default_factory=dict)
    rouge: Dict[Tuple[str, str], Dict[str, Optional[RougeScore]]] = field(default_factory=dict)

    def pairs(self) -> List[Tuple[str, str]]:
        return list(itertools.combinations(self.order, 2))

    def to_dict(self) -> Dict:
        return {
            "final_id": self.final_id,
            "order": list(self.order),
            "per_source": {sid: m.to_dict() for sid, m in self.per_source.items()},
            "kl": {f"{a}|{b}": v for (a, b), v in self.kl.items()},
            "coherence": dict(self.coherence),
            "rouge": {
                f"{a}|{b}": {name: (s.to_dict() if s is not None else None) for name, s in scores.items()}
                for (a, b), scores in self.rouge.items()
            },
        }


def entropy(d: TokenDistribution) -> float:
    """Shannon entropy in bits"""
    p = np.fromiter(d.mass.values(), dtype=np.float64, count=len(d.mass))
    if p.size == 0:
        return 0.0
    return max(0.0, float(-np.sum(p * np.log2(p))))


def kl_divergence(p: TokenDistribution, q: TokenDistribution, epsilon: float = DEFAULT_EPSILON) -> float:
    """
    KL(p || q) in bits over the smoothed union vocabulary.

    Raises:
        EmptySequence: if either distribution is empty
    """
    if not p.mass or not q.mass:
        raise EmptySequence("KL divergence needs two non-empty distributions")
    ps, qs = smooth_union(p, q, epsilon)
    vocab = ps.vocabulary()
    pv = np.array([ps.mass[t] for t in vocab], dtype=np.float64)
    qv = np.array([qs.mass[t] for t in vocab], dtype=np.float64)
    return float(np.sum(pv * np.log2(pv / qv)))


def mixture(pool: Sequence[TokenDistribution]) -> TokenDistribution:
    """Equal-weight mixture of distributions over their union vocabulary"""
    vocab = sorted(set().union(*(d.mass for d in pool)))
    n = len(pool)
    return TokenDistribution({t: math.fsum(d.get(t) for d in pool) / n for t in vocab})


def redundancy_score(target: TokenDistribution, pool: Sequence[TokenDistribution],
                     epsilon: float = DEFAULT_EPSILON) -> float:
    """
    Overlap of a summary with the shared distribution of a pool:
    exp(-KL(target || M)) where M is the uniform mixture of the pool.
    Higher means more overlap.
    """
    if not pool:
        raise ValueError("redundancy_score needs a non-empty pool")
    if not target.mass:
        raise EmptySequence("redundancy_score needs a non-empty target")
    return math.exp(-kl_divergence(target, mixture(pool), epsilon))


def tf_vectorizer(sentences: Sequence[str]) -> np.ndarray:
    """Term-frequency sentence vectors over the joint vocabulary"""
    counters = [tf_vector(tokenize(s).tokens) for s in sentences]
    vocab = sorted(set().union(*counters))
    index = {t: i for i, t in enumerate(vocab)}
    matrix = np.zeros((len(sentences), len(vocab)), dtype=np.float64)
    for row, counts in enumerate(counters):
        for token, count in counts.items():
            matrix[row, index[token]] = count
    return matrix


def coherence(sentences: SentenceSeq, vectorizer: Optional[SentenceVectorizer] = None) -> float:
    """
    Mean cosine similarity of adjacent sentences.

    Raises:
        TooFewSentences: with fewer than two sentences
    """
    if len(sentences) < 2:
        raise TooFewSentences(f"coherence needs 2 sentences, got {len(sentences)}")
    vectors = (vectorizer or tf_vectorizer)(list(sentences.sentences))
    sims = []
    for a, b in zip(vectors[:-1], vectors[1:]):
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        sims.append(0.0 if na == 0.0 or nb == 0.0 else float(np.dot(a, b) / (na * nb)))
    return math.fsum(sims) / len(sims)


def ttr(seq: TokenSeq) -> float:
    """Type-token ratio V/N"""
    if len(seq) == 0:
        raise EmptySequence("ttr needs at least one token")
    return len(set(seq.tokens)) / len(seq)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: TokenSeq, reference: TokenSeq, n: int = 1) -> RougeScore:
    """
    Clipped n-gram overlap between a candidate and a reference.

    Raises:
        TooShort: if either sequence has fewer than n tokens
    """
    if n < 1:
        raise ValueError("ROUGE order must be at least 1")
    if len(candidate) < n or len(reference) < n:
        raise TooShort(f"ROUGE-{n} needs at least {n} tokens on both sides")
    cand, ref = _ngrams(candidate.tokens, n), _ngrams(reference.tokens, n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, O(len(a)*len(b)) time and O(len(b)) memory"""
    if len(a) < len(b):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            current.append(previous[j - 1] + 1 if x == y else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: TokenSeq, reference: TokenSeq) -> RougeScore:
    """
    LCS-based ROUGE.

    Raises:
        EmptySequence: if either sequence is empty
    """
    if len(candidate) == 0 or len(reference) == 0:
        raise EmptySequence("ROUGE-L needs two non-empty sequences")
    lcs = lcs_length(candidate.tokens, reference.tokens)
    return RougeScore.from_counts(lcs, len(candidate), len(reference))


def _cell(func, *args, label: str = ""):
    try:
        return func(*args)
    except ConvergexError as e:
        logger.warning(f"metric cell absent cell={label} error={type(e).__name__} detail={e}")
        return None


def metric_table(summaries: Mapping[str, str], final_id: str,
                 policy: str = "default",
                 epsilon: float = DEFAULT_EPSILON,
                 vectorizer: Optional[SentenceVectorizer] = None,
                 abbreviations: Optional[Sequence[str]] = None) -> MetricReport:
    """
    Evaluate a set of summaries against each other.

    Args:
        summaries: Source id to summary text
        final_id: Id of the fused summary; listed first in the report
        policy: Tokenizer policy
        epsilon: Smoothing for KL and redundancy
        vectorizer: Sentence vectorizer for coherence (term frequency by default)
        abbreviations: Sentence splitter abbreviation list

    Returns:
        MetricReport with every pairwise KL, per-source entropy, TTR,
        redundancy and coherence, and ROUGE-1/2/L for every unordered pair
    """
    if len(summaries) < 2:
        raise ValueError("metric_table needs at least two summaries")
    if final_id not in summaries:
        raise ValueError(f"final summary {final_id!r} not among the summaries")

    order = [final_id] + sorted(sid for sid in summaries if sid != final_id)
    seqs = {sid: tokenize(summaries[sid], policy, sid) for sid in order}
    dists = {sid: _cell(term_distribution, seqs[sid], label=f"distribution:{sid}") for sid in order}

    report = MetricReport(order=order, final_id=final_id)

    for sid in order:
        dist = dists[sid]
        pool = [dists[o] for o in order if o != sid and dists[o] is not None]
        report.per_source[sid] = SourceMetrics(
            entropy=entropy(dist) if dist is not None else None,
            ttr=_cell(ttr, seqs[sid], label=f"ttr:{sid}"),
            redundancy=(_cell(redundancy_score, dist, pool, epsilon, label=f"redundancy:{sid}")
                        if dist is not None and pool else None),
        )
        report.coherence[sid] = _cell(
            coherence, split_sentences(summaries[sid], abbreviations), vectorizer,
            label=f"coherence:{sid}",
        )

    for a, b in itertools.permutations(order, 2):
        if dists[a] is None or dists[b] is None:
            report.kl[(a, b)] = None
        else:
            report.kl[(a, b)] = kl_divergence(dists[a], dists[b], epsilon)

    for a, b in report.pairs():
        report.rouge[(a, b)] = {
            "rouge1": _cell(rouge_n, seqs[a], seqs[b], 1, label=f"rouge1:{a}|{b}"),
            "rouge2": _cell(rouge_n, seqs[a], seqs[b], 2, label=f"rouge2:{a}|{b}"),
            "rougeL": _cell(rouge_l, seqs[a], seqs[b], label=f"rougeL:{a}|{b}"),
        }

    return report
