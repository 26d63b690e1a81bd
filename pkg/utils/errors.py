"""
Error Types

Exception hierarchy shared by every convergex module. Each class carries the
process exit code the command line reports for it.
"""

from typing import Optional


class ConvergexError(Exception):
    """Base class for all convergex errors"""

    exit_code = 2

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


# Text and metrics

class EmptySequence(ConvergexError, ValueError):
    """An operation needed at least one token"""


class TooFewSentences(ConvergexError, ValueError):
    """Coherence needs at least two sentences"""


class TooShort(ConvergexError, ValueError):
    """A token sequence is shorter than the requested n-gram order"""


# Video

class WrongColorSpace(ConvergexError, ValueError):
    """A frame is in the wrong color space for the operation"""


class DimensionMismatch(ConvergexError, ValueError):
    """Frames or vectors have incompatible shapes"""


class TooFewFrames(ConvergexError, ValueError):
    """Frame differencing needs at least two frames"""


class BadWindow(ConvergexError, ValueError):
    """Smoothing window is even, too short or longer than the series"""


# Clustering

class TooFewPoints(ConvergexError, ValueError):
    """Not enough points for the requested neighbourhood size"""


# Retrieval

class ParseError(ConvergexError, ValueError):
    """A corpus line could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class DuplicateId(ConvergexError, ValueError):
    """A corpus id appears more than once"""

    def __init__(self, doc_id: str, line: int):
        super().__init__(f"line {line}: duplicate id {doc_id!r}")
        self.doc_id = doc_id
        self.line = line


class EmptyInput(ConvergexError, ValueError):
    """An index cannot be built from zero vectors"""


class MissingDoc(ConvergexError, KeyError):
    """A search hit does not resolve to a corpus record"""

    def __str__(self) -> str:
        return self.message


class BadChunkParams(ConvergexError, ValueError):
    """Chunk size must exceed the overlap, and overlap must be non-negative"""


class CorruptIndex(ConvergexError, ValueError):
    """An index file failed magic, length or checksum validation"""


class IndexIoError(ConvergexError, OSError):
    """An index file could not be read or written"""


# Clients

SERVICE_ERROR_KINDS = ("timeout", "unavailable", "bad_response", "rate_limited")
RETRYABLE_KINDS = frozenset({"timeout", "unavailable", "rate_limited"})


class ServiceError(ConvergexError):
    """An external service failed"""

    exit_code = 4

    def __init__(self, kind: str, detail: str = "", service: str = ""):
        if kind not in SERVICE_ERROR_KINDS:
            raise ValueError(f"Unknown service error kind: {kind}")
        prefix = f"{service}: " if service else ""
        super().__init__(f"{prefix}{kind}: {detail}" if detail else f"{prefix}{kind}")
        self.kind = kind
        self.detail = detail
        self.service = service

    @property
    def retryable(self) -> bool:
        return self.kind in RETRYABLE_KINDS


class EmptyContent(ConvergexError, ValueError):
    """A summarizer was given nothing to summarize"""


# Convergence

class EmptyPool(ConvergexError, ValueError):
    """Sentence selection was given no candidates"""


class TooFewSources(ConvergexError, ValueError):
    """The final digest needs at least two source summaries"""


# Configuration

class ConfigError(ConvergexError, ValueError):
    """Configuration is invalid or names something unknown"""
