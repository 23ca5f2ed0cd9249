"""Ranked result lists, the interchange type between retrieval stages."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import LexiragError


@dataclass(frozen=True)
class RankedList:
    """Ordered (doc_id, score) pairs: scores non-increasing, ids unique."""

    items: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        ids = [doc_id for doc_id, _ in self.items]
        if len(ids) != len(set(ids)):
            raise LexiragError("ranked list contains duplicate doc ids")
        scores = [score for _, score in self.items]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise LexiragError("ranked list scores must be non-increasing")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(doc_id for doc_id, _ in self.items)

    def truncated(self, k: int) -> "RankedList":
        return RankedList(self.items[:k])

    def to_tsv(self) -> str:
        """Stable textual form, used for byte-level determinism checks."""
        return "".join(f"{doc_id}\t{score!r}\n" for doc_id, score in self.items)


def ranked(pairs) -> RankedList:
    """Sort (doc_id, score) pairs by descending score, ties by ascending doc_id."""
    ordered = sorted(pairs, key=lambda p: (-p[1], p[0]))
    return RankedList(tuple((doc_id, float(score)) for doc_id, score in ordered))
