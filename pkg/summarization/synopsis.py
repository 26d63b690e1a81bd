"""
Source Synopsis

Per-source preparation before convergence: merging a video transcript with
the text read from its keyframes, keeping only on-topic web pages, and
condensing the items of one source into a single synopsis.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence

from config.prompts.summarizer_presets import get_preset, presets_for_source
from core.media_services import OcrResult, TranscriptSegment, WebPage
from utils.errors import EmptyContent
from utils.text_processing import TokenDistribution, term_distribution, tokenize

logger = logging.getLogger("convergex.convergence")

SOURCE_KINDS = ("youtube", "arxiv", "web")


@dataclass(frozen=True)
class SourceSummary:
    source_kind: str
    source_id: str
    text: str
    policy: str = "default"

    def __post_init__(self):
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"Unknown source kind: {self.source_kind}")
        if not self.text or not self.text.strip():
            raise EmptyContent(f"summary of {self.source_id!r} is empty")

    @cached_property
    def token_distribution(self) -> TokenDistribution:
        return term_distribution(tokenize(self.text, self.policy, self.source_id))


def screen_line(result: OcrResult) -> str:
    return f"[SCREEN t={result.timestamp_s:.2f}] {result.text}"


def fuse_transcript_ocr(segments: Sequence[TranscriptSegment], ocr: Sequence[OcrResult]) -> str:
    """
    Interleave on-screen text with the transcript by time.

    Each transcript segment and each non-empty OCR result becomes one line;
    lines are ordered by start time, a transcript segment coming before OCR
    text with the same time.

    Args:
        segments: Transcript segments in time order
        ocr: OCR results of the keyframes

    Returns:
        Newline-joined timeline text
    """
    entries = [(seg.start_s, 0, position, seg.text) for position, seg in enumerate(segments)]
    for position, result in enumerate(ocr):
        if not math.isfinite(result.timestamp_s):
            raise ValueError(f"OCR result for frame {result.frame_index} has a non-finite timestamp")
        if result.text.strip():
            entries.append((result.timestamp_s, 1, position, screen_line(result)))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    return "\n".join(text for _, _, _, text in entries)


def topic_filter(pages: Sequence[WebPage], query: str, classifier,
                 threshold: float = 0.5, off_topic_labels: Sequence[str] = ()) -> List[WebPage]:
    """
    Keep pages the zero-shot classifier assigns to the query topic.

    Labels are the query followed by the off-topic labels. A page is kept
    when its title and snippet classify as the query with confidence at or
    above threshold. A threshold of 0 keeps every page without classifying.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    if threshold == 0.0:
        return list(pages)

    labels = [query] + [label for label in off_topic_labels if label != query]
    kept = []
    for page in pages:
        label, confidence = classifier.classify(page.classify_text, labels)
        if label == query and confidence >= threshold:
            kept.append(page)
        else:
            logger.debug(f"dropped page url={page.url} label={label!r} confidence={confidence:.3f}")
    if pages and not kept:
        logger.warning(f"topic filter kept no pages query={query!r} pages={len(pages)} threshold={threshold}")
    return kept


def per_source_synopsis(kind: str, texts: Sequence[str], summarizer,
                        source_id: Optional[str] = None,
                        max_workers: int = 1,
                        policy: str = "default") -> SourceSummary:
    """
    Summarize every item of a source, then merge the item summaries.

    Item summaries use the kind's per-item preset; with more than one item a
    final call with the kind's merge preset combines them in input order.

    Args:
        kind: youtube, arxiv or web
        texts: Item texts (transcripts, papers, pages); blank ones are skipped
        summarizer: Summarizer client
        source_id: Id of the result (defaults to kind)
        max_workers: Concurrent item summaries
        policy: Tokenizer policy for the cached distribution

    Returns:
        SourceSummary

    Raises:
        EmptyContent: if no item has text
    """
    item_preset, merge_preset = presets_for_source(kind)
    items = [t for t in texts if t and t.strip()]
    if len(items) < len(texts):
        logger.warning(f"skipped blank items kind={kind} skipped={len(texts) - len(items)}")
    if not items:
        raise EmptyContent(f"no text to summarize for source {kind}")

    instruction = get_preset(item_preset)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        summaries = list(pool.map(lambda t: summarizer.summarize(instruction, t, item_preset), items))

    if len(summaries) == 1:
        synopsis = summaries[0]
    else:
        synopsis = summarizer.summarize(get_preset(merge_preset), "\n\n".join(summaries), merge_preset)
    logger.info(f"synopsis kind={kind} items={len(items)} chars={len(synopsis)}")
    return SourceSummary(kind, source_id or kind, synopsis, policy)
