"""Inverted index construction and BM25 ranking against a naive reference scorer."""
from __future__ import annotations

import math
import random

import pytest

from lexirag.arabic_text import TokenizedQuery, tokenize
from lexirag.bm25 import Bm25Params, bm25_search, build_inverted_index, load_index, save_index
from lexirag.corpus import RetrievalDocument
from lexirag.ranking import RankedList


def docs_from_texts(texts):
    return [RetrievalDocument(doc_id=f"d{i+1}", text=t, entry_ref=f"d{i+1}")
            for i, t in enumerate(texts)]


def query(tokens, boosts=None):
    return TokenizedQuery(raw=" ".join(tokens), tokens=tuple(tokens), boosts=boosts or {})


def reference_bm25(documents, q: TokenizedQuery, params: Bm25Params, k: int) -> RankedList:
    """Independent scorer: loops over all documents, no inverted index."""
    token_lists = {d.doc_id: tokenize(d.text) for d in documents}
    n = len(documents)
    if n == 0:
        return RankedList()
    avgdl = sum(len(t) for t in token_lists.values()) / n
    seen = set()
    terms = [t for t in q.tokens if not (t in seen or seen.add(t))]
    scores = {}
    for doc in documents:
        tokens = token_lists[doc.doc_id]
        total = 0.0
        for term in terms:
            tf = tokens.count(term)
            if tf == 0:
                continue
            df = sum(1 for other in token_lists.values() if term in other)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            boost = q.boosts.get(term, 1)
            total += boost * idf * tf * (params.k1 + 1) / (
                tf + params.k1 * (1 - params.b + params.b * len(tokens) / avgdl)
            )
        if total > 0:
            scores[doc.doc_id] = total
    ordered = sorted(scores.items(), key=lambda p: (-p[1], p[0]))[:k]
    return RankedList(tuple(ordered))


TOY = docs_from_texts(["a b", "a a c", "b c c"])
PARAMS = Bm25Params(k1=1.2, b=0.75)


class TestBuildIndex:
    def test_toy_counts(self):
        index = build_inverted_index(TOY)
        assert index.doc_count == 3
        assert index.avg_doc_length == pytest.approx(8 / 3)
        assert index.document_frequency("a") == 2
        assert index.document_frequency("c") == 2

    def test_empty(self):
        index = build_inverted_index([])
        assert index.doc_count == 0

    def test_single_doc(self):
        index = build_inverted_index(docs_from_texts(["x"]))
        assert index.postings == {"x": (("d1", 1),)}


class TestSearch:
    def test_toy_ranking_matches_reference(self):
        index = build_inverted_index(TOY)
        got = bm25_search(index, query(["a"]), PARAMS, k=10)
        assert got.doc_ids == ("d2", "d1")
        assert got.items == reference_bm25(TOY, query(["a"]), PARAMS, 10).items

    def test_unindexed_terms_empty(self):
        index = build_inverted_index(TOY)
        assert bm25_search(index, query(["zzz"]), PARAMS, k=5).items == ()

    def test_boost_scales_scores_linearly(self):
        index = build_inverted_index(TOY)
        plain = bm25_search(index, query(["a"]), PARAMS, k=5)
        boosted = bm25_search(index, query(["a"], {"a": 2}), PARAMS, k=5)
        assert boosted.doc_ids == plain.doc_ids
        for (_, s1), (_, s2) in zip(plain, boosted):
            assert s2 == pytest.approx(2 * s1)

    def test_empty_index_returns_empty(self):
        assert bm25_search(build_inverted_index([]), query(["a"]), PARAMS, k=3).items == ()

    def test_deterministic_bytes(self):
        index_a = build_inverted_index(TOY)
        index_b = build_inverted_index(TOY)
        q = query(["a", "c"])
        assert (
            bm25_search(index_a, q, PARAMS, k=10).to_tsv()
            == bm25_search(index_b, q, PARAMS, k=10).to_tsv()
        )

    def test_matching_scores_positive(self):
        rng = random.Random(9)
        vocabulary = [f"t{i}" for i in range(20)]
        texts = [" ".join(rng.choices(vocabulary, k=rng.randrange(1, 15))) for _ in range(30)]
        index = build_inverted_index(docs_from_texts(texts))
        for _ in range(20):
            q = query(rng.sample(vocabulary, 3))
            for _, score in bm25_search(index, q, PARAMS, k=30):
                assert score > 0


class TestOracleEquivalence:
    def test_random_corpora_match_reference(self):
        rng = random.Random(42)
        vocabulary = [f"w{i}" for i in range(30)]
        for trial in range(30):
            n_docs = rng.randrange(1, 40)
            documents = docs_from_texts(
                [" ".join(rng.choices(vocabulary, k=rng.randrange(1, 20)))
                 for _ in range(n_docs)]
            )
            index = build_inverted_index(documents)
            tokens = rng.choices(vocabulary, k=rng.randrange(1, 8))
            boosts = {t: rng.randrange(1, 4) for t in tokens if rng.random() < 0.5}
            q = query(tokens, boosts)
            k = rng.randrange(1, n_docs + 5)
            assert bm25_search(index, q, PARAMS, k).items == \
                reference_bm25(documents, q, PARAMS, k).items

    def test_disjoint_same_length_doc_keeps_single_term_ranking(self):
        rng = random.Random(5)
        texts = [" ".join(rng.choices(["a", "b", "c", "d"], k=6)) for _ in range(10)]
        base = docs_from_texts(texts)
        extended = base + [RetrievalDocument("zz", "x y z x y z", "zz")]
        q = query(["a"])
        before = bm25_search(build_inverted_index(base), q, PARAMS, 20)
        after = bm25_search(build_inverted_index(extended), q, PARAMS, 20)
        assert before.doc_ids == after.doc_ids


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        index = build_inverted_index(TOY)
        path = tmp_path / "bm25.idx"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded == index
