"""QA question model and BioASQ-style JSON parsing.

Only factoid and yes/no questions are kept; list and summary types are
dropped at parse time.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError

log = logging.getLogger(__name__)

QUESTION_TYPES = ("factoid", "yesno")


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str
    qtype: str  # "factoid" | "yesno"
    answers: tuple[str, ...]
    gold_snippets: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.qtype not in QUESTION_TYPES:
            raise ValueError(f"unknown question type {self.qtype!r}")
        if not self.text:
            raise ValueError("question text must be non-empty")
        if not self.answers:
            raise ValueError(f"question {self.question_id!r} has no answers")


def answer_exclusion_strings(q: Question) -> tuple[str, ...]:
    """Strings whose presence marks a passage as answer-bearing.

    For yes/no questions the literal answers would match almost any text,
    so the gold snippets are used instead.
    """
    if q.qtype == "yesno":
        return q.gold_snippets
    return q.answers


def text_contains_any(text: str, needles: tuple[str, ...] | list[str]) -> bool:
    """Case-insensitive raw substring containment against any needle."""
    hay = text.lower()
    return any(n and n.lower() in hay for n in needles)


def _flatten_answers(value) -> list[str]:
    # exact_answer comes as a string, a list of strings, or nested lists
    if isinstance(value, str):
        return [value] if value.strip() else []
    if isinstance(value, list):
        out: list[str] = []
        for item in value:
            out.extend(_flatten_answers(item))
        return out
    return []


def parse_bioasq(path: str | Path) -> list[Question]:
    """Parse a BioASQ-style question file.

    Expects {"questions": [{"body", "type", "exact_answer", "snippets"}]}.
    Questions of unknown type or with no usable answers are skipped and
    counted in a warning.
    """
    try:
        with open(path, encoding="utf-8") as f:
            raw = f.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc})") from exc
    if not raw.strip():
        raise ParseError(f"{path}: empty question file")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict) or "questions" not in data:
        raise ParseError(f"{path}: expected a top-level 'questions' array")

    questions: list[Question] = []
    skipped_type = 0
    skipped_invalid = 0
    for i, entry in enumerate(data["questions"]):
        qtype = entry.get("type", "")
        if qtype not in QUESTION_TYPES:
            skipped_type += 1
            continue
        answers = _flatten_answers(entry.get("exact_answer", []))
        snippets = tuple(
            s["text"] for s in entry.get("snippets", []) if isinstance(s, dict) and s.get("text")
        )
        text = (entry.get("body") or "").strip()
        if not text or not answers:
            skipped_invalid += 1
            continue
        questions.append(
            Question(
                question_id=str(entry.get("id", f"q{i}")),
                text=text,
                qtype=qtype,
                answers=tuple(answers),
                gold_snippets=snippets,
            )
        )
    if skipped_type:
        log.warning("%s: skipped %d questions of unsupported type", path, skipped_type)
    if skipped_invalid:
        log.warning("%s: skipped %d questions with empty body or answers", path, skipped_invalid)
    return questions
