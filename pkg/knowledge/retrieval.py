"""
Knowledge Retrieval Module

This module implements corpus ingestion, re-ranking and the chunk-level
retrieval step of the paper RAG chain. Vector storage and search live in
knowledge.embedding; embeddings always come from an Embedder client.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from knowledge.embedding import SearchHit, VectorIndex, build_index, search
from utils.errors import BadChunkParams, DuplicateId, MissingDoc, ParseError

logger = logging.getLogger("convergex.retrieval")

REQUIRED_FIELDS = ("id", "title", "abstract", "categories", "url")


@dataclass(frozen=True)
class DocRecord:
    """One corpus entry; text is the full plain-text document when available"""
    id: str
    title: str
    abstract: str
    categories: Tuple[str, ...] = ()
    url: str = ""
    text: Optional[str] = None

    @property
    def embed_text(self) -> str:
        return f"{self.title}\n{self.abstract}"

    @property
    def document(self) -> str:
        return self.text if self.text else self.abstract


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    seq_no: int
    text: str
    token_span: Tuple[int, int]

    @property
    def chunk_id(self) -> str:
        return f"{self.doc_id}#{self.seq_no}"


@dataclass
class ChunkStore:
    """In-memory vector store over the chunks of one document"""
    chunks: List[Chunk]
    index: Optional[VectorIndex] = None
    by_id: Dict[str, Chunk] = field(init=False, repr=False)

    def __post_init__(self):
        self.by_id = {c.chunk_id: c for c in self.chunks}


def _parse_record(line: str, line_no: int) -> DocRecord:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", line_no) from e
    if not isinstance(raw, dict):
        raise ParseError("expected a JSON object", line_no)

    missing = [name for name in REQUIRED_FIELDS if name not in raw]
    if missing:
        raise ParseError(f"missing field(s) {missing}", line_no)
    for name in ("id", "title", "abstract", "url"):
        if not isinstance(raw[name], str):
            raise ParseError(f"field {name!r} must be a string", line_no)
    categories = raw["categories"]
    if not isinstance(categories, list) or not all(isinstance(c, str) for c in categories):
        raise ParseError("field 'categories' must be an array of strings", line_no)
    if not raw["id"]:
        raise ParseError("empty id", line_no)
    if not (raw["title"] + raw["abstract"]).strip():
        raise ParseError("title and abstract are both empty", line_no)
    text = raw.get("text")
    if text is not None and not isinstance(text, str):
        raise ParseError("field 'text' must be a string", line_no)

    return DocRecord(raw["id"], raw["title"], raw["abstract"], tuple(categories), raw["url"], text)


def ingest_corpus(path: Union[str, Path]) -> List[DocRecord]:
    """
    Parse a JSON-Lines corpus.

    Args:
        path: File with one object per line (id, title, abstract, categories,
            url and an optional text)

    Returns:
        Records in file order; blank lines are skipped

    Raises:
        ParseError: naming the offending line
        DuplicateId: if an id repeats
    """
    records: List[DocRecord] = []
    seen = set()
    with open(path, "rb") as f:
        for line_no, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise ParseError(f"invalid UTF-8 at byte {e.start}", line_no) from e
            if not line.strip():
                continue
            record = _parse_record(line, line_no)
            if record.id in seen:
                raise DuplicateId(record.id, line_no)
            seen.add(record.id)
            records.append(record)
    logger.info(f"Ingested {len(records)} records from {path}")
    return records


def embed_corpus(docs: Sequence[DocRecord], embedder) -> VectorIndex:
    """Embed title + abstract of every record and build the search index"""
    return build_index([(doc.id, embedder.embed(doc.embed_text)) for doc in docs])


def rerank(query: str, hits: Sequence[SearchHit],
           docs: Union[Mapping[str, DocRecord], Sequence[DocRecord]], scorer) -> List[SearchHit]:
    """
    Reorder hits by a pair scorer over (query, title + abstract).

    Every hit is resolved and scored before anything is reordered, so a
    failing scorer leaves no partial result. Equal scores keep their order.

    Args:
        query: Search query text
        hits: Hits from the vector search
        docs: Records by id, or a sequence of records
        scorer: Client with score(query, passage) -> float

    Returns:
        Hits ranked from 1 carrying the scorer's scores

    Raises:
        MissingDoc: if a hit id has no record
    """
    by_id = docs if isinstance(docs, Mapping) else {d.id: d for d in docs}
    resolved = []
    for hit in hits:
        if hit.id not in by_id:
            raise MissingDoc(f"search hit {hit.id!r} has no corpus record")
        resolved.append(by_id[hit.id])

    scores = [float(scorer.score(query, doc.embed_text)) for doc in resolved]
    order = sorted(range(len(hits)), key=lambda i: -scores[i])
    return [SearchHit(hits[i].id, scores[i], rank) for rank, i in enumerate(order, start=1)]


def chunk_text(text: str, size: int = 256, overlap: int = 32, doc_id: str = "") -> List[Chunk]:
    """
    Split whitespace tokens into windows of size tokens that advance by
    size - overlap. The last window may be shorter.

    Raises:
        BadChunkParams: unless size > overlap >= 0
    """
    if overlap < 0 or size <= overlap:
        raise BadChunkParams(f"need size > overlap >= 0, got size={size} overlap={overlap}")
    tokens = text.split()
    chunks: List[Chunk] = []
    start = 0
    while start < len(tokens):
        end = min(start + size, len(tokens))
        chunks.append(Chunk(doc_id, len(chunks), " ".join(tokens[start:end]), (start, end)))
        if end == len(tokens):
            break
        start += size - overlap
    return chunks


def build_chunk_store(doc: DocRecord, embedder, size: int = 256, overlap: int = 32) -> ChunkStore:
    """Chunk a document and embed every chunk into an in-memory index"""
    chunks = chunk_text(doc.document, size, overlap, doc.id)
    store = ChunkStore(chunks)
    if chunks:
        store.index = build_index([(c.chunk_id, embedder.embed(c.text)) for c in chunks])
    logger.debug(f"chunk store doc={doc.id} chunks={len(chunks)}")
    return store


def retrieve_chunks(store: ChunkStore, query: str, embedder, k: int = 4) -> List[Chunk]:
    """Top-k chunks for the query, returned in document order"""
    if store.index is None:
        return []
    hits = search(store.index, embedder.embed(query), k)
    return sorted((store.by_id[h.id] for h in hits), key=lambda c: c.seq_no)


def hit_rows(hits: Sequence[SearchHit], docs: Mapping[str, DocRecord]) -> List[Dict[str, Any]]:
    """Search output rows {id, score, rank, title, url}"""
    return [
        {"id": h.id, "rank": h.rank, "score": h.score, "title": docs[h.id].title, "url": docs[h.id].url}
        for h in hits
    ]


def rerank_head(query: str, hits: Sequence[SearchHit], docs: Mapping[str, DocRecord],
                scorer, n: int = 10) -> List[SearchHit]:
    """
    Re-rank the first n hits; the rest keep their order with ranks continuing after them.

    Tail scores are shifted to sit strictly below the lowest re-ranked score.
    """
    head = rerank(query, hits[:n], docs, scorer)
    rest = hits[n:]
    shift = 0.0
    if head and rest and rest[0].score >= head[-1].score:
        shift = rest[0].score - head[-1].score + 1.0
    tail = [SearchHit(h.id, h.score - shift, rank) for rank, h in enumerate(rest, start=len(head) + 1)]
    return head + tail
