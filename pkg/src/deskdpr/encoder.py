"""Hashed bag-of-words dual encoder.

Texts become L2-normalized token-count vectors in a fixed hashed
vocabulary (blake2b bucketing, stable across processes).  Two linear
maps, one for questions and one for passages, project those sparse
features to dense d-dimensional embeddings compared by dot product.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse

from .bm25 import tokenize
from .errors import DimensionError, ParseError, UnsupportedVersion

MODEL_MAGIC = b"DPRM"
MODEL_VERSION = 1

DEFAULT_DIM = 128
DEFAULT_HASH_DIM = 16384


def hash_token(token: str, hash_dim: int) -> int:
    """Stable bucket for a token: blake2b, 8-byte digest, mod hash_dim."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % hash_dim


def featurize(text: str, hash_dim: int = DEFAULT_HASH_DIM) -> sparse.csr_array:
    """One L2-normalized hashed count row (shape (1, hash_dim)).

    Empty or non-alphanumeric text maps to the zero vector.
    """
    return featurize_texts([text], hash_dim)


def featurize_texts(texts: Sequence[str], hash_dim: int = DEFAULT_HASH_DIM) -> sparse.csr_array:
    """Stacked hashed-count rows, one per text, each L2-normalized."""
    if hash_dim < 1:
        raise ValueError(f"hash_dim must be >= 1, got {hash_dim}")
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts: dict[int, float] = {}
        for token in tokenize(text):
            bucket = hash_token(token, hash_dim)
            counts[bucket] = counts.get(bucket, 0.0) + 1.0
        row_indices = sorted(counts)
        row_values = np.array([counts[i] for i in row_indices], dtype=np.float64)
        if row_values.size:
            row_values /= np.sqrt((row_values * row_values).sum())
        indices.extend(row_indices)
        data.extend(row_values.tolist())
        indptr.append(len(indices))
    return sparse.csr_array(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(texts), hash_dim),
    )


@dataclass
class EncoderModel:
    """Two projection matrices over the shared hashed feature space."""

    d: int
    hash_dim: int
    w_q: np.ndarray
    w_p: np.ndarray

    def __post_init__(self):
        for name, w in (("w_q", self.w_q), ("w_p", self.w_p)):
            if w.shape != (self.d, self.hash_dim):
                raise DimensionError(
                    f"{name} has shape {w.shape}, expected ({self.d}, {self.hash_dim})"
                )


def init_model(d: int = DEFAULT_DIM, hash_dim: int = DEFAULT_HASH_DIM, seed: int = 0) -> EncoderModel:
    """Uniform(-1/sqrt(hash_dim), 1/sqrt(hash_dim)) init, question tower first."""
    if d < 1 or hash_dim < 1:
        raise ValueError(f"d and hash_dim must be >= 1, got d={d}, hash_dim={hash_dim}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(hash_dim)
    w_q = rng.uniform(-bound, bound, size=(d, hash_dim))
    w_p = rng.uniform(-bound, bound, size=(d, hash_dim))
    return EncoderModel(d=d, hash_dim=hash_dim, w_q=w_q, w_p=w_p)


def _project(features: sparse.csr_array, w: np.ndarray) -> np.ndarray:
    # sparse @ dense; row results are independent of batch composition.
    return features @ w.T


def encode_questions(model: EncoderModel, texts: Sequence[str]) -> np.ndarray:
    return _project(featurize_texts(texts, model.hash_dim), model.w_q)


def encode_passages(model: EncoderModel, texts: Sequence[str]) -> np.ndarray:
    return _project(featurize_texts(texts, model.hash_dim), model.w_p)


def encode_question(model: EncoderModel, text: str) -> np.ndarray:
    return encode_questions(model, [text])[0]


def encode_passage(model: EncoderModel, text: str) -> np.ndarray:
    return encode_passages(model, [text])[0]


def sim(q_emb: np.ndarray, p_emb: np.ndarray) -> float:
    """Dot-product similarity, multiply-then-sum so blocked search matches."""
    if q_emb.shape != p_emb.shape:
        raise DimensionError(f"embedding shapes differ: {q_emb.shape} vs {p_emb.shape}")
    a = np.asarray(q_emb, dtype=np.float64)
    b = np.asarray(p_emb, dtype=np.float64)
    return float((a * b).sum())


def save_model(model: EncoderModel, path: str | Path) -> None:
    """Binary layout: magic, u32 version, u32 d, u32 hash_dim, then both
    matrices as float32 little-endian row-major (question tower first)."""
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<III", MODEL_VERSION, model.d, model.hash_dim))
        f.write(np.ascontiguousarray(model.w_q, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(model.w_p, dtype="<f4").tobytes())


def load_model(path: str | Path) -> EncoderModel:
    """Read a model written by save_model.  Weights come back as float64."""
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ParseError(f"{path}: too short to be a model file")
    if raw[:4] != MODEL_MAGIC:
        raise ParseError(f"{path}: bad magic {raw[:4]!r}, expected {MODEL_MAGIC!r}")
    version, d, hash_dim = struct.unpack("<III", raw[4:16])
    if version != MODEL_VERSION:
        raise UnsupportedVersion(f"{path}: model version {version}, this build reads {MODEL_VERSION}")
    matrix_bytes = d * hash_dim * 4
    expected = 16 + 2 * matrix_bytes
    if len(raw) != expected:
        raise ParseError(f"{path}: expected {expected} bytes for d={d} hash_dim={hash_dim}, found {len(raw)}")
    w_q = np.frombuffer(raw, dtype="<f4", count=d * hash_dim, offset=16).reshape(d, hash_dim)
    w_p = np.frombuffer(raw, dtype="<f4", count=d * hash_dim, offset=16 + matrix_bytes).reshape(d, hash_dim)
    return EncoderModel(d=d, hash_dim=hash_dim, w_q=w_q.astype(np.float64), w_p=w_p.astype(np.float64))
