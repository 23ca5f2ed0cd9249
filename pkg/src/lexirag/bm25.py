"""Inverted index with Okapi BM25 scoring over retrieval documents.

score(d) = sum over query terms t of
    boost(t) * idf(t) * tf * (k1+1) / (tf + k1 * (1 - b + b * dl/avgdl))
with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), which keeps every score
of a matching document strictly positive.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .arabic_text import TokenizedQuery, tokenize
from .corpus import RetrievalDocument
from .errors import ArtifactError
from .ranking import RankedList

INDEX_MAGIC = "lexirag-bm25-index v1"


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError("k1 must be > 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")


@dataclass(frozen=True)
class InvertedIndex:
    postings: dict[str, tuple[tuple[str, int], ...]]
    doc_lengths: dict[str, int]
    doc_count: int
    avg_doc_length: float

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))


def build_inverted_index(documents: Iterable[RetrievalDocument]) -> InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for doc in documents:
        tokens = tokenize(doc.text)
        doc_lengths[doc.doc_id] = len(tokens)
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((doc.doc_id, tf))
    n = len(doc_lengths)
    avg = sum(doc_lengths.values()) / n if n else 0.0
    frozen = {term: tuple(plist) for term, plist in postings.items()}
    return InvertedIndex(postings=frozen, doc_lengths=doc_lengths, doc_count=n, avg_doc_length=avg)


def idf(index: InvertedIndex, term: str) -> float:
    df = index.document_frequency(term)
    return math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))


def _unique_terms(tokens: Sequence[str]) -> list[str]:
    seen = set()
    out = []
    for tok in tokens:
        if tok not in seen:
            seen.add(tok)
            out.append(tok)
    return out


def bm25_search(
    index: InvertedIndex, query: TokenizedQuery, params: Bm25Params, k: int
) -> RankedList:
    """Top-k documents with positive score; ties broken by ascending doc_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if index.doc_count == 0:
        return RankedList()
    scores: dict[str, float] = {}
    for term in _unique_terms(query.tokens):
        plist = index.postings.get(term)
        if not plist:
            continue
        weight = query.boosts.get(term, 1) * idf(index, term)
        for doc_id, tf in plist:
            dl = index.doc_lengths[doc_id]
            denom = tf + params.k1 * (1.0 - params.b + params.b * dl / index.avg_doc_length)
            scores[doc_id] = scores.get(doc_id, 0.0) + weight * tf * (params.k1 + 1.0) / denom
    hits = [(doc_id, score) for doc_id, score in scores.items() if score > 0.0]
    hits.sort(key=lambda p: (-p[1], p[0]))
    return RankedList(tuple(hits[:k]))


def save_index(index: InvertedIndex, path) -> None:
    payload = {
        "doc_count": index.doc_count,
        "avg_doc_length": index.avg_doc_length,
        "doc_lengths": index.doc_lengths,
        "postings": {term: [list(p) for p in plist] for term, plist in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(INDEX_MAGIC + "\n")
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_index(path) -> InvertedIndex:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"BM25 index not found at {path}; run `lexirag index build` first")
    with open(path, encoding="utf-8") as fh:
        magic = fh.readline().rstrip("\n")
        if magic != INDEX_MAGIC:
            raise ArtifactError(f"{path}: unrecognized index header {magic!r}")
        payload = json.load(fh)
    postings = {
        term: tuple((doc_id, int(tf)) for doc_id, tf in plist)
        for term, plist in payload["postings"].items()
    }
    return InvertedIndex(
        postings=postings,
        doc_lengths={k: int(v) for k, v in payload["doc_lengths"].items()},
        doc_count=int(payload["doc_count"]),
        avg_doc_length=float(payload["avg_doc_length"]),
    )
