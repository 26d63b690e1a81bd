"""
Vector Index

Exact flat index over dense embeddings with cosine search and a binary
on-disk format.

File layout (little-endian): magic "MSVI", version u16, metric u8, dim u32,
count u64, count x dim float32 rows, CRC32 of everything before it, then a
JSON footer running to the end of the file. The footer names the ids
sidecar (one JSON string per line) relative to the index file.
"""

import json
import logging
import os
import struct
import zlib
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from utils.errors import ConfigError, CorruptIndex, DimensionMismatch, EmptyInput, IndexIoError

logger = logging.getLogger("convergex.retrieval")

MAGIC = b"MSVI"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHBIQ")
CRC = struct.Struct("<I")
METRIC_CODES = {"cosine": 0}
METRIC_NAMES = {code: name for name, code in METRIC_CODES.items()}


@dataclass(frozen=True, eq=False)
class Embedding:
    """A dense vector; the norm is computed once on first use"""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise DimensionMismatch(f"embedding must be a non-empty vector, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("embedding values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class SearchHit:
    id: str
    score: float
    rank: int

    def to_dict(self):
        return {"id": self.id, "score": self.score, "rank": self.rank}


@dataclass(frozen=True, eq=False)
class VectorIndex:
    """Immutable once built: rows[i] is the vector stored under ids[i]"""
    dim: int
    rows: np.ndarray
    ids: Tuple[str, ...]
    metric: str = "cosine"

    def __post_init__(self):
        if self.metric not in METRIC_CODES:
            raise ConfigError(f"Unknown index metric: {self.metric}")
        if self.rows.ndim != 2 or self.rows.shape[1] != self.dim:
            raise DimensionMismatch(f"rows must have shape (n, {self.dim}), got {self.rows.shape}")
        if self.rows.shape[0] != len(self.ids):
            raise ValueError(f"{self.rows.shape[0]} rows but {len(self.ids)} ids")
        self.rows.setflags(write=False)

    @property
    def count(self) -> int:
        return len(self.ids)

    @cached_property
    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.rows.astype(np.float64), axis=1)


def _as_vector(value: Union[Embedding, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(value, Embedding):
        return value.values
    return Embedding(np.asarray(value)).values


def build_index(embeddings: Sequence[Tuple[str, Union[Embedding, np.ndarray]]],
                metric: str = "cosine") -> VectorIndex:
    """
    Build a flat index from (id, vector) pairs, keeping insertion order.

    Raises:
        EmptyInput: if no vectors are given
        DimensionMismatch: if the vectors differ in length
    """
    if not embeddings:
        raise EmptyInput("cannot build an index from zero vectors")
    ids = []
    vectors = []
    dim = None
    for doc_id, embedding in embeddings:
        vector = _as_vector(embedding)
        if dim is None:
            dim = vector.shape[0]
        elif vector.shape[0] != dim:
            raise DimensionMismatch(f"vector {doc_id!r} has dimension {vector.shape[0]}, expected {dim}")
        ids.append(str(doc_id))
        vectors.append(vector)
    rows = np.ascontiguousarray(np.vstack(vectors), dtype=np.float32)
    logger.debug(f"built index count={len(ids)} dim={dim} metric={metric}")
    return VectorIndex(dim, rows, tuple(ids), metric)


def cosine_scores(index: VectorIndex, query: Union[Embedding, np.ndarray]) -> np.ndarray:
    vector = _as_vector(query)
    if vector.shape[0] != index.dim:
        raise DimensionMismatch(f"query has dimension {vector.shape[0]}, index has {index.dim}")
    dots = index.rows.astype(np.float64) @ vector
    denominators = index.row_norms * float(np.linalg.norm(vector))
    scores = np.zeros(index.count, dtype=np.float64)
    nonzero = denominators > 0
    scores[nonzero] = dots[nonzero] / denominators[nonzero]
    return scores


def search(index: VectorIndex, query: Union[Embedding, np.ndarray], k: int) -> List[SearchHit]:
    """
    Exact top-k by cosine similarity.

    Args:
        index: Index to search
        query: Query vector of the index dimension
        k: Number of hits; more than the index holds returns every row

    Returns:
        Hits ranked from 1, ties broken by insertion order

    Raises:
        DimensionMismatch: if the query length differs from the index dimension
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    scores = cosine_scores(index, query)
    order = np.argsort(-scores, kind="stable")[:k]
    return [SearchHit(index.ids[i], float(scores[i]), rank) for rank, i in enumerate(order, start=1)]


def ids_path_for(path: Union[str, Path]) -> Path:
    return Path(path).with_suffix(".ids.jsonl")


def save_index(index: VectorIndex, path: Union[str, Path]) -> None:
    """
    Write the index file and its ids sidecar. Both are written to temporary
    names first and moved into place.

    Raises:
        IndexIoError: if either file cannot be written
    """
    path = Path(path)
    sidecar = ids_path_for(path)
    ids_blob = "".join(json.dumps(doc_id, ensure_ascii=False) + "\n" for doc_id in index.ids).encode("utf-8")

    header = HEADER.pack(MAGIC, FORMAT_VERSION, METRIC_CODES[index.metric], index.dim, index.count)
    body = np.ascontiguousarray(index.rows, dtype="<f4").tobytes()
    checksum = CRC.pack(zlib.crc32(header + body) & 0xFFFFFFFF)
    footer = json.dumps(
        {"ids_crc32": zlib.crc32(ids_blob) & 0xFFFFFFFF, "ids_file": sidecar.name},
        sort_keys=True, separators=(",", ":"),
    ).encode("utf-8")

    try:
        _write_atomic(sidecar, ids_blob)
        _write_atomic(path, header + body + checksum + footer)
    except OSError as e:
        raise IndexIoError(f"cannot write index {path}: {e}") from e
    logger.info(f"Saved index count={index.count} dim={index.dim} to {path}")


def _write_atomic(path: Path, data: bytes) -> None:
    temp = path.with_name(f".{path.name}.tmp")
    with open(temp, "wb") as f:
        f.write(data)
    os.replace(temp, path)


def load_index(path: Union[str, Path]) -> VectorIndex:
    """
    Read an index written by save_index.

    Raises:
        IndexIoError: if the index or its sidecar cannot be read
        CorruptIndex: on bad magic, version, length, checksum or footer
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise IndexIoError(f"cannot read index {path}: {e}") from e

    if len(data) < HEADER.size:
        raise CorruptIndex(f"{path}: file shorter than the header")
    magic, version, metric_code, dim, count = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptIndex(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CorruptIndex(f"{path}: unsupported version {version}")
    if metric_code not in METRIC_NAMES:
        raise CorruptIndex(f"{path}: unknown metric code {metric_code}")
    if dim == 0:
        raise CorruptIndex(f"{path}: zero dimension")

    body_end = HEADER.size + count * dim * 4
    if len(data) < body_end + CRC.size:
        raise CorruptIndex(f"{path}: truncated (expected at least {body_end + CRC.size} bytes, got {len(data)})")
    (stored_crc,) = CRC.unpack_from(data, body_end)
    if zlib.crc32(data[:body_end]) & 0xFFFFFFFF != stored_crc:
        raise CorruptIndex(f"{path}: checksum mismatch")

    footer = _parse_footer(data[body_end + CRC.size:], path)
    sidecar = path.parent / footer["ids_file"]
    try:
        ids_blob = sidecar.read_bytes()
    except OSError as e:
        raise IndexIoError(f"cannot read ids file {sidecar}: {e}") from e
    if zlib.crc32(ids_blob) & 0xFFFFFFFF != footer["ids_crc32"]:
        raise CorruptIndex(f"{sidecar}: checksum mismatch")

    try:
        lines = ids_blob.decode("utf-8").split("\n")
        if lines[-1] == "":
            lines.pop()
        ids = tuple(json.loads(line) for line in lines)
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptIndex(f"{sidecar}: {e}") from e
    if len(ids) != count or not all(isinstance(doc_id, str) for doc_id in ids):
        raise CorruptIndex(f"{sidecar}: expected {count} string ids, got {len(ids)}")

    rows = np.frombuffer(data, dtype="<f4", count=count * dim, offset=HEADER.size)
    rows = rows.astype(np.float32).reshape(count, dim)
    logger.debug(f"loaded index count={count} dim={dim} from {path}")
    return VectorIndex(dim, rows, ids, METRIC_NAMES[metric_code])


def _parse_footer(raw: bytes, path: Path) -> dict:
    try:
        footer = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptIndex(f"{path}: unreadable footer: {e}") from e
    if (not isinstance(footer, dict) or not isinstance(footer.get("ids_file"), str)
            or not isinstance(footer.get("ids_crc32"), int)):
        raise CorruptIndex(f"{path}: footer is missing ids_file or ids_crc32")
    if Path(footer["ids_file"]).name != footer["ids_file"]:
        raise CorruptIndex(f"{path}: ids_file must be a bare file name")
    return footer
