"""
Text Processing Utility

Tokenization, sentence segmentation and token probability distributions
shared by the metrics, convergence and client modules.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

import regex

from utils.errors import ConfigError, EmptySequence

TOKENIZER_POLICIES = ("default", "whitespace")

# Word characters with internal apostrophes or periods kept together ("don't", "e.g", "3.14")
WORD_PATTERN = regex.compile(r"\w+(?:['’.]\w+)*")
PUNCTUATION_ONLY = regex.compile(r"^[\p{P}\p{S}]+$")
SENTENCE_END = regex.compile(r"[.!?]+(?=\s|$)")

DEFAULT_ABBREVIATIONS = (
    "dr.", "mr.", "mrs.", "ms.", "prof.", "sr.", "jr.", "st.",
    "e.g.", "i.e.", "vs.", "fig.", "eq.", "al.", "approx.", "no.",
)


@dataclass(frozen=True)
class TokenSeq:
    """Ordered tokens of one text"""
    tokens: Tuple[str, ...]
    source_id: str = ""

    def __post_init__(self):
        if any(not t for t in self.tokens):
            raise ValueError("TokenSeq cannot contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class TokenDistribution:
    """Probability mass per unique token"""
    mass: Mapping[str, float]

    def __post_init__(self):
        if not self.mass:
            return
        if any(not (p > 0.0) for p in self.mass.values()):
            raise ValueError("TokenDistribution masses must be positive")
        total = math.fsum(self.mass.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"TokenDistribution masses sum to {total}, expected 1")

    @property
    def vocab_size(self) -> int:
        return len(self.mass)

    def vocabulary(self) -> List[str]:
        return sorted(self.mass)

    def get(self, token: str) -> float:
        return self.mass.get(token, 0.0)


@dataclass(frozen=True)
class SentenceSeq:
    """Sentences of a text with their character spans"""
    sentences: Tuple[str, ...]
    offsets: Tuple[Tuple[int, int], ...] = field(default=())

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def tokenize(text: str, policy: str = "default", source_id: str = "") -> TokenSeq:
    """
    Split text into tokens.

    The default policy lowercases and segments on unicode word boundaries.
    The whitespace policy splits on whitespace only and keeps case.
    Both drop tokens made only of punctuation.

    Args:
        text: Input text
        policy: "default" or "whitespace"
        source_id: Opaque id carried on the result

    Returns:
        TokenSeq in input order
    """
    if policy == "default":
        tokens = [t for t in WORD_PATTERN.findall(text.lower()) if not PUNCTUATION_ONLY.match(t)]
    elif policy == "whitespace":
        tokens = [t for t in text.split() if not PUNCTUATION_ONLY.match(t)]
    else:
        raise ConfigError(f"Unknown tokenizer policy: {policy}")
    return TokenSeq(tuple(tokens), source_id)


def term_distribution(seq: TokenSeq) -> TokenDistribution:
    """
    Maximum-likelihood term distribution of a token sequence.

    Raises:
        EmptySequence: if the sequence has no tokens
    """
    if len(seq) == 0:
        raise EmptySequence(f"no tokens in source {seq.source_id!r}")
    counts = Counter(seq.tokens)
    n = len(seq)
    return TokenDistribution({t: c / n for t, c in counts.items()})


def smooth_union(p: TokenDistribution, q: TokenDistribution,
                 epsilon: float = 1e-9) -> Tuple[TokenDistribution, TokenDistribution]:
    """
    Re-express two distributions over their union vocabulary with additive
    smoothing and renormalization, so KL divergence stays finite.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    vocab = sorted(set(p.mass) | set(q.mass))
    denom = 1.0 + len(vocab) * epsilon

    def _smooth(d: TokenDistribution) -> TokenDistribution:
        return TokenDistribution({t: (d.get(t) + epsilon) / denom for t in vocab})

    return _smooth(p), _smooth(q)


def split_sentences(text: str, abbreviations: Optional[Iterable[str]] = None) -> SentenceSeq:
    """
    Rule-based sentence segmentation.

    A sentence ends at a run of terminal punctuation (. ! ?) followed by
    whitespace or the end of text, unless the word carrying the period is a
    listed abbreviation. Text without terminators is a single sentence.

    Args:
        text: Input text
        abbreviations: Lowercase abbreviations including the trailing period

    Returns:
        SentenceSeq with stripped sentences and their spans
    """
    abbrevs = {a.lower() for a in (DEFAULT_ABBREVIATIONS if abbreviations is None else abbreviations)}
    sentences: List[str] = []
    offsets: List[Tuple[int, int]] = []
    start = 0

    def _emit(begin: int, end: int) -> None:
        while begin < end and text[begin].isspace():
            begin += 1
        while end > begin and text[end - 1].isspace():
            end -= 1
        if begin < end:
            sentences.append(text[begin:end])
            offsets.append((begin, end))

    for match in SENTENCE_END.finditer(text):
        end = match.end()
        word_start = end
        while word_start > start and not text[word_start - 1].isspace():
            word_start -= 1
        if text[word_start:end].lower() in abbrevs:
            continue
        _emit(start, end)
        start = end

    _emit(start, len(text))
    return SentenceSeq(tuple(sentences), tuple(offsets))


def tf_vector(tokens: Iterable[str]) -> Counter:
    """Term-frequency vector as a Counter"""
    return Counter(tokens)


def cosine_similarity(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """
    Cosine similarity of two sparse vectors; 0.0 when either is all zeros.
    """
    if len(a) > len(b):
        a, b = b, a
    dot = math.fsum(v * b[k] for k, v in a.items() if k in b)
    norm_a = math.sqrt(math.fsum(v * v for v in a.values()))
    norm_b = math.sqrt(math.fsum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def first_sentences(text: str, k: int = 3, abbreviations: Optional[Sequence[str]] = None) -> str:
    """
    Keep the first k sentences of a text.

    Args:
        text: Text to shorten
        k: Number of sentences to keep

    Returns:
        The leading sentences joined by single spaces
    """
    sentences = split_sentences(text, abbreviations).sentences
    return " ".join(sentences[:k])


def normalized_key(text: str) -> Tuple[str, ...]:
    """Token tuple used to detect sentences that are the same up to case and punctuation"""
    return tokenize(text).tokens
