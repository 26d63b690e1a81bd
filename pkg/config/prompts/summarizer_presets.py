"""
Summarizer Presets

Named instruction templates sent to the Summarizer service. Per-item presets
summarize one video, web page or paper; merge presets turn several item
summaries into one synopsis for a source.
"""

from typing import Dict, Tuple

from utils.errors import ConfigError

# Summary of one video's fused transcript and on-screen text
VIDEO_SUMMARY_PROMPT = """
Summarize the following video transcript. Lines starting with [SCREEN t=...]
are text read from the video frames at that time. Keep the key concepts,
definitions and examples, drop greetings, sponsor messages and filler.
Write plain prose sentences.
"""

# Synopsis of a playlist from its video summaries
PLAYLIST_SYNOPSIS_PROMPT = """
The following are summaries of the videos of one playlist, in playlist order.
Write a single concise synopsis of the playlist that covers the main topics
once each, in a logical order. Write plain prose sentences.
"""

# Digest of one web page
WEB_PAGE_DIGEST_PROMPT = """
Distill the key insights of the following web page. Ignore navigation,
advertisements and unrelated sidebars. Write plain prose sentences.
"""

# Digest of all filtered web pages
WEB_DIGEST_PROMPT = """
The following are digests of web pages about the same topic. Combine them
into one digest of the key insights, stating each point once.
Write plain prose sentences.
"""

# Summary of one paper
PAPER_SUMMARY_PROMPT = """
Summarize the following research paper material. Keep the problem, the
approach and the main findings. Write plain prose sentences.
"""

# Synopsis of all retrieved papers
PAPER_SYNOPSIS_PROMPT = """
The following are summaries of research papers retrieved for one query.
Write one synopsis of the research landscape they describe, stating each
point once. Write plain prose sentences.
"""

# Answer grounded on retrieved chunks
RAG_ANSWER_PROMPT = """
Using only the context passages below, describe the methodology, datasets,
and results of the paper. If the context does not mention one of them,
leave it out. Write plain prose sentences.
"""

# Abstractive fusion of all source synopses
FINAL_FUSION_PROMPT = """
The following are synopses of the same topic from different sources. Write
one summary that keeps every distinct piece of information and states shared
information only once. Write plain prose sentences.
"""

PRESETS: Dict[str, str] = {
    "video_summary": VIDEO_SUMMARY_PROMPT,
    "playlist_synopsis": PLAYLIST_SYNOPSIS_PROMPT,
    "web_page_digest": WEB_PAGE_DIGEST_PROMPT,
    "web_digest": WEB_DIGEST_PROMPT,
    "paper_summary": PAPER_SUMMARY_PROMPT,
    "paper_synopsis": PAPER_SYNOPSIS_PROMPT,
    "rag_answer": RAG_ANSWER_PROMPT,
    "final_fusion": FINAL_FUSION_PROMPT,
}

# (per-item preset, merge preset) for each source kind
SOURCE_PRESETS: Dict[str, Tuple[str, str]] = {
    "youtube": ("video_summary", "playlist_synopsis"),
    "web": ("web_page_digest", "web_digest"),
    "arxiv": ("paper_summary", "paper_synopsis"),
}


def get_preset(name: str) -> str:
    """
    Look up an instruction template.

    Raises:
        ConfigError: if the preset is unknown
    """
    try:
        return PRESETS[name].strip()
    except KeyError:
        raise ConfigError(f"Unknown summarizer preset: {name}") from None


def presets_for_source(kind: str) -> Tuple[str, str]:
    try:
        return SOURCE_PRESETS[kind]
    except KeyError:
        raise ConfigError(f"Unknown source kind: {kind}") from None
