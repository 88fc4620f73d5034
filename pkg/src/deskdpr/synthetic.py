"""Seeded synthetic corpus and question generator for end-to-end runs.

Documents are filler words grouped so that chunking reproduces the
planned passages exactly.  Each question gets one positive passage
carrying a rare marker token (twice) and an answer token (once), both of
which appear nowhere else in the corpus.  The question repeats the
marker and borrows a few filler words from its positive so BM25 has a
candidate pool to mine hard negatives from.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Passage

DEFAULT_VOCAB_SIZE = 400

_FACTOID_TEMPLATE = "what value does the {u} marker report alongside {f1} and {u} within {f2}"
_YESNO_TEMPLATE = "does the {u} marker described with {f1} also mention {u} near {f2}"


@dataclass(frozen=True)
class SyntheticData:
    """Corpus rows, BioASQ-shaped question payload, and the planted truth."""

    documents: tuple[dict, ...]
    questions: dict
    expected_positive: dict[str, str]
    chunk_size: int

    @property
    def n_questions(self) -> int:
        return len(self.questions["questions"])


def generate(
    n_passages: int = 2000,
    n_questions: int = 200,
    seed: int = 0,
    chunk_size: int = 100,
    yesno_fraction: float = 0.1,
    vocab_size: int = DEFAULT_VOCAB_SIZE,
) -> SyntheticData:
    """Build a corpus of exactly n_passages passages and n_questions questions."""
    if n_questions > n_passages:
        raise ValueError(f"cannot plant {n_questions} questions in {n_passages} passages")
    if chunk_size < 7:
        raise ValueError(f"chunk_size must be >= 7 to fit a planted answer window, got {chunk_size}")
    rng = random.Random(seed)
    vocab = [f"w{i:03d}" for i in range(vocab_size)]

    # Plan documents: 1 to 4 passages each, non-final passages exactly
    # chunk_size words so re-chunking reproduces the plan.
    min_tail = max(5, chunk_size * 3 // 10)
    doc_words: list[list[list[str]]] = []
    passage_slots: list[tuple[int, int]] = []
    remaining = n_passages
    while remaining:
        k = min(rng.randint(1, 4), remaining)
        lengths = [chunk_size] * (k - 1) + [rng.randint(min_tail, chunk_size)]
        chunks = [rng.choices(vocab, k=n) for n in lengths]
        doc_index = len(doc_words)
        doc_words.append(chunks)
        passage_slots.extend((doc_index, ci) for ci in range(k))
        remaining -= k

    positive_slots = rng.sample(range(n_passages), n_questions)
    questions: list[dict] = []
    expected_positive: dict[str, str] = {}
    for qi, slot in enumerate(positive_slots):
        doc_index, chunk_index = passage_slots[slot]
        words = doc_words[doc_index][chunk_index]
        marker = f"uniq{qi:03d}tag"
        answer = f"ans{qi:03d}val"
        pos = rng.randint(0, len(words) - 5)
        words[pos] = marker
        words[pos + 2] = answer
        words[pos + 4] = marker
        snippet = " ".join(words[pos : pos + 5])
        fillers = rng.sample(words[:pos] + words[pos + 5 :], 2) if len(words) > 7 else ["w000", "w001"]
        question_id = f"synth{qi:03d}"
        if rng.random() < yesno_fraction:
            body = _YESNO_TEMPLATE.format(u=marker, f1=fillers[0], f2=fillers[1])
            entry = {
                "id": question_id,
                "body": body,
                "type": "yesno",
                "exact_answer": "yes",
                "snippets": [{"text": snippet}],
            }
        else:
            body = _FACTOID_TEMPLATE.format(u=marker, f1=fillers[0], f2=fillers[1])
            entry = {
                "id": question_id,
                "body": body,
                "type": "factoid",
                "exact_answer": [[answer]],
                "snippets": [{"text": snippet}],
            }
        questions.append(entry)
        doc_id = f"doc{doc_index:04d}"
        expected_positive[question_id] = Passage.make_id(doc_id, chunk_index)

    documents = tuple(
        {
            "doc_id": f"doc{di:04d}",
            "title": f"report {rng.choice(vocab)} {rng.choice(vocab)}",
            "body": " ".join(w for chunk in chunks for w in chunk),
        }
        for di, chunks in enumerate(doc_words)
    )
    return SyntheticData(
        documents=documents,
        questions={"questions": questions},
        expected_positive=expected_positive,
        chunk_size=chunk_size,
    )


def write_corpus_jsonl(data: SyntheticData, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc in data.documents:
            f.write(json.dumps(doc, ensure_ascii=False) + "\n")


def write_questions_json(data: SyntheticData, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data.questions, f, ensure_ascii=False, indent=2)
        f.write("\n")
