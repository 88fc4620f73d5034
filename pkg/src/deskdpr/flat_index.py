"""Exact dot-product search over float32 passage embeddings.

Search scans the matrix in blocks, keeping a bounded heap of the best k
candidates.  Scores are computed as elementwise multiply then sum, which
gives bit-identical results whether a row is scored alone, inside a
block, or by the naive reference scan.  Ties break toward the lower row
ordinal.
"""

from __future__ import annotations

import heapq
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import PassageStore, render_encoder_input
from .encoder import EncoderModel, encode_passages
from .errors import CorruptIndex, DimensionError, DuplicateId, EmptyCorpus, UnsupportedVersion
from .results import RetrievalResult, SearchHit

INDEX_MAGIC = b"DRIX"
INDEX_VERSION = 1


@dataclass
class FlatIndex:
    """ids[i] labels row i of vectors (float32, shape (M, d))."""

    d: int
    ids: list[str]
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape != (len(self.ids), self.d):
            raise DimensionError(
                f"vectors shape {self.vectors.shape} does not match "
                f"{len(self.ids)} ids of dimension {self.d}"
            )
        if self.vectors.dtype != np.float32:
            raise DimensionError(f"vectors must be float32, got {self.vectors.dtype}")
        seen: set[str] = set()
        for pid in self.ids:
            if pid in seen:
                raise DuplicateId(f"duplicate passage id in index: {pid!r}")
            seen.add(pid)

    def __len__(self) -> int:
        return len(self.ids)


def build_index(model: EncoderModel, store: PassageStore, batch_rows: int = 1024) -> FlatIndex:
    """Encode every passage (title [SEP] text) and stack as float32 rows."""
    if len(store) == 0:
        raise EmptyCorpus("cannot build a dense index over an empty store")
    if batch_rows < 1:
        raise ValueError(f"batch_rows must be >= 1, got {batch_rows}")
    texts = [render_encoder_input(p) for p in store]
    ids = [p.passage_id for p in store]
    rows = []
    for lo in range(0, len(texts), batch_rows):
        rows.append(encode_passages(model, texts[lo : lo + batch_rows]).astype(np.float32))
    return FlatIndex(d=model.d, ids=ids, vectors=np.vstack(rows))


def _check_query(index: FlatIndex, q_emb: np.ndarray, k: int) -> np.ndarray:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(q_emb)
    if q.ndim != 1 or q.shape[0] != index.d:
        raise DimensionError(f"query shape {q.shape} does not match index dimension {index.d}")
    return q.astype(np.float64)


def search(index: FlatIndex, q_emb: np.ndarray, k: int, block_rows: int = 4096) -> RetrievalResult:
    """Top-k rows by dot product, blocked scan with a bounded heap."""
    if block_rows < 1:
        raise ValueError(f"block_rows must be >= 1, got {block_rows}")
    q = _check_query(index, q_emb, k)
    # Heap holds (score, -ordinal); among equal scores the larger ordinal
    # is the smaller tuple, so it is evicted first and low ordinals win.
    heap: list[tuple[float, int]] = []
    for lo in range(0, len(index), block_rows):
        block = index.vectors[lo : lo + block_rows]
        scores = (block * q).sum(axis=1)
        for offset, score in enumerate(scores):
            item = (float(score), -(lo + offset))
            if len(heap) < k:
                heapq.heappush(heap, item)
            elif item > heap[0]:
                heapq.heapreplace(heap, item)
    ranked = sorted(heap, key=lambda item: (-item[0], -item[1]))
    return RetrievalResult(
        hits=[
            SearchHit(passage_id=index.ids[-neg_ordinal], score=score, rank=rank)
            for rank, (score, neg_ordinal) in enumerate(ranked, start=1)
        ]
    )


def search_naive(index: FlatIndex, q_emb: np.ndarray, k: int) -> RetrievalResult:
    """Reference scan: score every row on its own, sort the lot."""
    q = _check_query(index, q_emb, k)
    scores = np.array([(index.vectors[i] * q).sum() for i in range(len(index))])
    ordinals = np.arange(len(index))
    top = np.lexsort((ordinals, -scores))[:k]
    return RetrievalResult(
        hits=[
            SearchHit(passage_id=index.ids[i], score=float(scores[i]), rank=rank)
            for rank, i in enumerate(top, start=1)
        ]
    )


def save_index(index: FlatIndex, path: str | Path) -> None:
    """Binary layout: magic, u32 version, u32 d, u64 M, ids as u32
    length-prefixed UTF-8, vectors float32 little-endian row-major, then
    a u32 CRC-32 of everything before it."""
    parts = [INDEX_MAGIC, struct.pack("<IIQ", INDEX_VERSION, index.d, len(index))]
    for pid in index.ids:
        encoded = pid.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    parts.append(np.ascontiguousarray(index.vectors, dtype="<f4").tobytes())
    payload = b"".join(parts)
    with open(path, "wb") as f:
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload)))


def load_index(path: str | Path) -> FlatIndex:
    """Read an index written by save_index, verifying the checksum."""
    raw = Path(path).read_bytes()
    if len(raw) < 20:
        raise CorruptIndex(f"{path}: too short to be an index file")
    if raw[:4] != INDEX_MAGIC:
        raise CorruptIndex(f"{path}: bad magic {raw[:4]!r}, expected {INDEX_MAGIC!r}")
    stored_crc = struct.unpack("<I", raw[-4:])[0]
    payload = raw[:-4]
    if zlib.crc32(payload) != stored_crc:
        raise CorruptIndex(f"{path}: checksum mismatch, file is damaged")
    version, d, m = struct.unpack("<IIQ", payload[4:20])
    if version != INDEX_VERSION:
        raise UnsupportedVersion(f"{path}: index version {version}, this build reads {INDEX_VERSION}")
    offset = 20
    ids: list[str] = []
    for _ in range(m):
        if offset + 4 > len(payload):
            raise CorruptIndex(f"{path}: truncated id table")
        (id_len,) = struct.unpack_from("<I", payload, offset)
        offset += 4
        if offset + id_len > len(payload):
            raise CorruptIndex(f"{path}: truncated id table")
        ids.append(payload[offset : offset + id_len].decode("utf-8"))
        offset += id_len
    vector_bytes = m * d * 4
    if len(payload) - offset != vector_bytes:
        raise CorruptIndex(
            f"{path}: expected {vector_bytes} bytes of vectors, found {len(payload) - offset}"
        )
    vectors = np.frombuffer(payload, dtype="<f4", count=m * d, offset=offset).reshape(m, d).copy()
    return FlatIndex(d=d, ids=ids, vectors=vectors)
