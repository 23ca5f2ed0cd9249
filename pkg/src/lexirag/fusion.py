"""Weighted reciprocal-rank fusion, pluggable reranking, and reranker training pairs."""
from __future__ import annotations

import os
import random
from dataclasses import dataclass
from typing import Sequence

import httpx

from .arabic_text import tokenize
from .corpus import Corpus
from .errors import InsufficientDataError, LexiragError, TransportError
from .ranking import RankedList

RERANK_API_KEY_ENV = "LEXIRAG_RERANK_API_KEY"
DEFAULT_RRF_K = 60
DEFAULT_FUSION_WEIGHTS = (0.55, 0.45)  # lexical first, dense second


@dataclass(frozen=True)
class FusionConfig:
    weights: tuple[float, ...] = DEFAULT_FUSION_WEIGHTS
    k_rrf: int = DEFAULT_RRF_K

    def __post_init__(self):
        if self.k_rrf < 1:
            raise ValueError("k_rrf must be > 0")
        if any(w < 0 for w in self.weights):
            raise ValueError("fusion weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("fusion weights must sum to 1")


def rrf_fuse(lists: Sequence[RankedList], config: FusionConfig) -> RankedList:
    """fused(d) = sum_i w_i / (k_rrf + rank_i(d)), ranks 1-based, absences omitted."""
    if len(lists) != len(config.weights):
        raise LexiragError(
            f"{len(lists)} ranked lists but {len(config.weights)} fusion weights"
        )
    fused: dict[str, float] = {}
    for weight, ranked_list in zip(config.weights, lists):
        for rank, (doc_id, _) in enumerate(ranked_list, start=1):
            fused[doc_id] = fused.get(doc_id, 0.0) + weight / (config.k_rrf + rank)
    ordered = sorted(fused.items(), key=lambda p: (-p[1], p[0]))
    return RankedList(tuple(ordered))


class RerankScorer:
    """Behavioral contract: deterministic scalar relevance for (query, passage)."""

    name: str = "base"

    def score(self, query: str, passage: str) -> float:
        raise NotImplementedError

    def score_many(self, query: str, passages: Sequence[str]) -> list[float]:
        return [self.score(query, passage) for passage in passages]


class TokenOverlapScorer(RerankScorer):
    """Offline scorer: fraction of distinct query tokens present in the passage."""

    name = "token-overlap"

    def score(self, query: str, passage: str) -> float:
        q_tokens = set(tokenize(query))
        if not q_tokens:
            return 0.0
        p_tokens = set(tokenize(passage))
        return len(q_tokens & p_tokens) / len(q_tokens)


class HttpRerankScorer(RerankScorer):
    """Remote cross-encoder contract: POST {model, query, passages} -> {scores}."""

    def __init__(self, endpoint: str, model: str = "", api_key_env: str = RERANK_API_KEY_ENV,
                 client: httpx.Client | None = None, timeout: float = 30.0):
        self.name = f"http:{model or 'reranker'}"
        self.endpoint = endpoint
        self.model = model
        self._api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self._api_key_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def score(self, query: str, passage: str) -> float:
        return self.score_many(query, [passage])[0]

    def score_many(self, query: str, passages: Sequence[str]) -> list[float]:
        body = {"model": self.model, "query": query, "passages": list(passages)}
        try:
            resp = self._client.post(self.endpoint, json=body, headers=self._headers())
            resp.raise_for_status()
            payload = resp.json()
        except httpx.HTTPError as exc:
            raise TransportError(f"rerank request failed: {exc}") from exc
        scores = payload.get("scores")
        if not isinstance(scores, list) or len(scores) != len(passages):
            raise TransportError("malformed rerank response: missing or mis-sized scores")
        return [float(s) for s in scores]


def rerank(scorer: RerankScorer, query: str, candidates: RankedList, corpus: Corpus) -> RankedList:
    """Rescore candidates with the scorer; same ids, new order, ties by doc_id."""
    if not candidates:
        return RankedList()
    texts = [corpus.document(doc_id).text for doc_id in candidates.doc_ids]
    scores = scorer.score_many(query, texts)
    pairs = sorted(zip(candidates.doc_ids, scores), key=lambda p: (-p[1], p[0]))
    return RankedList(tuple((doc_id, float(score)) for doc_id, score in pairs))


@dataclass(frozen=True)
class RerankPair:
    query: str
    doc_id: str
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


def make_rerank_pairs(qa_items, corpus: Corpus, n_pos: int, n_neg: int, seed: int
                      ) -> list[RerankPair]:
    """Sample balanced positive/negative training pairs for a cross-encoder.

    Positives come from gold (query, document) pairings; negatives pair a
    sampled query with a uniformly sampled document outside its gold set.
    Deterministic under the seed, output order included.
    """
    all_doc_ids = [doc.doc_id for doc in corpus.documents]
    if len(all_doc_ids) < 2:
        raise InsufficientDataError("corpus must contain more than one document")
    gold_pairs = []
    gold_by_query: dict[str, set[str]] = {}
    for item in qa_items:
        gold_by_query.setdefault(item.question, set()).update(item.gold_doc_ids)
        for doc_id in item.gold_doc_ids:
            gold_pairs.append((item.question, doc_id))
    if n_pos > len(gold_pairs):
        raise InsufficientDataError(
            f"requested {n_pos} positives but only {len(gold_pairs)} gold pairs exist"
        )
    rng = random.Random(seed)
    positives = [RerankPair(q, d, 1) for q, d in rng.sample(gold_pairs, n_pos)]
    queries = sorted(q for q in gold_by_query if len(gold_by_query[q]) < len(all_doc_ids))
    if n_neg > 0 and not queries:
        raise InsufficientDataError("every query's gold set covers the whole corpus")
    negatives = []
    while len(negatives) < n_neg:
        query = rng.choice(queries)
        doc_id = rng.choice(all_doc_ids)
        if doc_id in gold_by_query[query]:
            continue
        negatives.append(RerankPair(query, doc_id, 0))
    pairs = positives + negatives
    rng.shuffle(pairs)
    return pairs


def _tsv_safe(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


def write_rerank_pairs(path, pairs: Sequence[RerankPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(f"{_tsv_safe(pair.query)}\t{pair.doc_id}\t{pair.label}\n")


def read_rerank_pairs(path) -> list[RerankPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            query, doc_id, label = line.rstrip("\n").split("\t")
            pairs.append(RerankPair(query, doc_id, int(label)))
    return pairs
