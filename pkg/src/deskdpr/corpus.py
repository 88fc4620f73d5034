"""Document cleaning, fixed-size word chunking, and the passage store.

A "word" is a maximal run of non-whitespace characters.  Documents are
split into disjoint blocks of ``chunk_size`` words; every chunk except
possibly the last one is full, and joining the chunks in order reproduces
the document's word sequence exactly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateId, EmptyDocument, ParseError, UnsupportedVersion
from .manifest import sha256_file

DEFAULT_CHUNK_SIZE = 100
SEPARATOR_TOKEN = "[SEP]"

STORE_FORMAT = "deskdpr-passages"
STORE_VERSION = 1

# Control characters that survive a plain-text dump; normalized to spaces
# before whitespace collapsing.
_CONTROL_RE = re.compile(r"[\x00-\x08\x0b-\x1f\x7f]")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str


@dataclass(frozen=True)
class Passage:
    passage_id: str
    doc_id: str
    title: str
    text: str
    chunk_index: int

    @staticmethod
    def make_id(doc_id: str, chunk_index: int) -> str:
        return f"{doc_id}#{chunk_index}"

    @staticmethod
    def split_id(passage_id: str) -> tuple[str, int]:
        """Recover (doc_id, chunk_index) from a passage id."""
        doc_id, _, idx = passage_id.rpartition("#")
        return doc_id, int(idx)


class PassageStore:
    """Immutable ordered collection of passages with id -> ordinal lookup.

    Ordinals are dense 0..M-1, follow insertion order, and are stable
    across save/load.
    """

    def __init__(
        self,
        passages: Iterable[Passage],
        chunk_size: int = DEFAULT_CHUNK_SIZE,
        corpus_checksum: str = "",
    ):
        self.passages: list[Passage] = list(passages)
        self.chunk_size = chunk_size
        self.corpus_checksum = corpus_checksum
        self._ordinal: dict[str, int] = {}
        for i, p in enumerate(self.passages):
            if p.passage_id in self._ordinal:
                raise DuplicateId(f"duplicate passage_id {p.passage_id!r}")
            self._ordinal[p.passage_id] = i

    def __len__(self) -> int:
        return len(self.passages)

    def __iter__(self) -> Iterator[Passage]:
        return iter(self.passages)

    def __getitem__(self, ordinal: int) -> Passage:
        return self.passages[ordinal]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PassageStore):
            return NotImplemented
        return (
            self.passages == other.passages
            and self.chunk_size == other.chunk_size
            and self.corpus_checksum == other.corpus_checksum
        )

    def ordinal_of(self, passage_id: str) -> int:
        return self._ordinal[passage_id]

    def get(self, passage_id: str) -> Passage:
        return self.passages[self._ordinal[passage_id]]

    def __contains__(self, passage_id: str) -> bool:
        return passage_id in self._ordinal


def clean_document(raw: str, title: str, doc_id: str) -> Document:
    """Normalize a raw text body into a single-spaced plain-text document.

    Control characters become spaces, runs of whitespace collapse to one
    space, and the result is trimmed.  Raises EmptyDocument if nothing
    remains.
    """
    body = _CONTROL_RE.sub(" ", raw)
    body = _WS_RE.sub(" ", body).strip()
    if not body:
        raise EmptyDocument(f"document {doc_id!r} is empty after cleaning")
    return Document(doc_id=doc_id, title=title, body=body)


def chunk_document(doc: Document, chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[Passage]:
    """Split a document into disjoint passages of chunk_size words.

    Every passage except possibly the last has exactly chunk_size words;
    the final short remainder is kept as its own passage.
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    words = doc.body.split()
    if not words:
        raise ValueError(f"document {doc.doc_id!r} has an empty body")
    passages = []
    for chunk_index, start in enumerate(range(0, len(words), chunk_size)):
        text = " ".join(words[start : start + chunk_size])
        passages.append(
            Passage(
                passage_id=Passage.make_id(doc.doc_id, chunk_index),
                doc_id=doc.doc_id,
                title=doc.title,
                text=text,
                chunk_index=chunk_index,
            )
        )
    return passages


def render_encoder_input(p: Passage, separator: str = SEPARATOR_TOKEN) -> str:
    """Text form fed to the passage encoder: title, separator, passage text."""
    return f"{p.title} {separator} {p.text}"


def build_store(
    documents: Iterable[Document],
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    corpus_checksum: str = "",
) -> PassageStore:
    """Chunk every document and assemble the passage store in input order."""
    passages: list[Passage] = []
    for doc in documents:
        passages.extend(chunk_document(doc, chunk_size))
    return PassageStore(passages, chunk_size=chunk_size, corpus_checksum=corpus_checksum)


@dataclass
class IngestStats:
    documents: int = 0
    passages: int = 0
    dropped_empty: int = 0


def read_corpus_jsonl(path: str | Path) -> list[dict]:
    """Read a raw corpus file: one JSON object per line with doc_id/title/body."""
    rows = []
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{path}: line {lineno}: invalid JSON ({exc})") from exc
                for key in ("doc_id", "title", "body"):
                    if key not in row:
                        raise ParseError(f"{path}: line {lineno}: missing field {key!r}")
                rows.append(row)
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc})") from exc
    if not rows:
        raise ParseError(f"{path}: no documents found")
    return rows


def ingest_corpus(path: str | Path, chunk_size: int = DEFAULT_CHUNK_SIZE) -> tuple[PassageStore, IngestStats]:
    """Read, clean, and chunk a raw corpus file into a passage store.

    Documents that are empty after cleaning are skipped and counted.
    """
    stats = IngestStats()
    docs: list[Document] = []
    for row in read_corpus_jsonl(path):
        try:
            docs.append(clean_document(row["body"], row["title"], row["doc_id"]))
        except EmptyDocument:
            stats.dropped_empty += 1
            continue
    store = build_store(docs, chunk_size=chunk_size, corpus_checksum=sha256_file(path))
    stats.documents = len(docs)
    stats.passages = len(store)
    return store, stats


def save_store(store: PassageStore, path: str | Path) -> None:
    """Persist a passage store as JSONL with a leading metadata line."""
    with open(path, "w", encoding="utf-8") as f:
        meta = {
            "format": STORE_FORMAT,
            "version": STORE_VERSION,
            "chunk_size": store.chunk_size,
            "corpus_checksum": store.corpus_checksum,
            "count": len(store),
        }
        f.write(json.dumps(meta) + "\n")
        for p in store:
            row = {
                "passage_id": p.passage_id,
                "doc_id": p.doc_id,
                "title": p.title,
                "text": p.text,
                "chunk_index": p.chunk_index,
            }
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_store(path: str | Path) -> PassageStore:
    """Load a passage store; the inverse of save_store.

    Raises ParseError (with the offending line) on malformed or truncated
    files and DuplicateId on repeated passage ids.
    """
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        if not header.strip():
            raise ParseError(f"{path}: line 1: missing metadata line")
        try:
            meta = json.loads(header)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line 1: invalid JSON ({exc})") from exc
        if meta.get("format") != STORE_FORMAT:
            raise ParseError(f"{path}: line 1: not a passage store file")
        if meta.get("version") != STORE_VERSION:
            raise UnsupportedVersion(
                f"{path}: store version {meta.get('version')!r}, this build reads {STORE_VERSION}"
            )
        passages = []
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: invalid JSON ({exc})") from exc
            try:
                passages.append(
                    Passage(
                        passage_id=row["passage_id"],
                        doc_id=row["doc_id"],
                        title=row["title"],
                        text=row["text"],
                        chunk_index=row["chunk_index"],
                    )
                )
            except KeyError as exc:
                raise ParseError(f"{path}: line {lineno}: missing field {exc}") from exc
    expected = meta.get("count")
    if expected is not None and expected != len(passages):
        raise ParseError(
            f"{path}: truncated store: metadata says {expected} passages, found {len(passages)}"
        )
    return PassageStore(
        passages,
        chunk_size=meta.get("chunk_size", DEFAULT_CHUNK_SIZE),
        corpus_checksum=meta.get("corpus_checksum", ""),
    )
