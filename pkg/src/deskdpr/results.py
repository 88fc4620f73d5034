"""Ranked retrieval results shared by the lexical and dense search paths."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SearchHit:
    passage_id: str
    score: float
    rank: int  # 1-based


@dataclass
class RetrievalResult:
    """Hits sorted by score descending; ties broken by ascending ordinal."""

    hits: list[SearchHit]

    def __len__(self) -> int:
        return len(self.hits)

    def __iter__(self):
        return iter(self.hits)

    def ids(self) -> list[str]:
        return [h.passage_id for h in self.hits]


def hits_from_ranking(ranked: list[tuple[str, float]]) -> RetrievalResult:
    """Wrap an already-sorted (passage_id, score) ranking with dense ranks."""
    return RetrievalResult(
        hits=[SearchHit(pid, score, rank) for rank, (pid, score) in enumerate(ranked, start=1)]
    )
