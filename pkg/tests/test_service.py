"""HTTP service endpoints over a fixture engine with offline providers."""
from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from lexirag.bm25 import build_inverted_index
from lexirag.engine import Engine
from lexirag.errors import TransportError
from lexirag.fusion import RerankScorer, TokenOverlapScorer
from lexirag.pipeline import (
    ExtractiveStubClient,
    PipelineConfig,
    RetrievalIndexes,
    load_exemplars,
)
from lexirag.service import create_app


@pytest.fixture(scope="module")
def small_engine(fixture_corpus, intent_stack, stopwords):
    model, vocab, _ = intent_stack
    corpus = fixture_corpus
    return Engine(
        corpus=corpus,
        indexes=RetrievalIndexes(bm25=build_inverted_index(corpus.documents)),
        intent_model=model,
        vocab=vocab,
        stopwords=stopwords,
        scorer=TokenOverlapScorer(),
        generator=ExtractiveStubClient(),
        exemplars=load_exemplars(),
        config=PipelineConfig(),
    )


@pytest.fixture(scope="module")
def client(small_engine):
    return TestClient(create_app(small_engine))


class TestHealth:
    def test_corpus_size(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok", "corpus_size": 10}


class TestQuery:
    def test_deterministic_answer_body(self, client, fixture_corpus):
        payload = {"question": "ما معنى عبارة سَخَاوَة؟", "mode": "bm25", "k": 3}
        first = client.post("/v1/query", json=payload)
        second = client.post("/v1/query", json=payload)
        assert first.status_code == 200
        assert first.content == second.content
        body = first.json()
        assert body["intent"] == "meaning"
        assert body["not_found"] is False
        assert fixture_corpus.entry("e002").meaning in body["answer"]
        assert body["documents"][0]["doc_id"] == "e002"
        assert set(body["documents"][0]["fields"]) <= {
            "compound_form", "citation", "semantic_field", "meaning"
        }

    def test_invalid_mode_rejected(self, client):
        resp = client.post("/v1/query", json={"question": "سؤال", "mode": "hybrid"})
        assert resp.status_code == 422

    def test_fields_follow_intent(self, client):
        resp = client.post(
            "/v1/query",
            json={"question": "من القائل الذي استخدم كلمة عَصَل في الشاهد: يَامِنُوا عَنْ هَذَا الْعَصَلِ؟"},
        )
        body = resp.json()
        assert body["intent"] == "author"
        for doc in body["documents"]:
            assert set(doc["fields"]) <= {"word", "compound_form", "citation", "author"}

    def test_provider_outage_maps_to_502(self, fixture_corpus, intent_stack, stopwords):
        class Outage(RerankScorer):
            def score(self, query, passage):
                raise TransportError("connection refused")

        model, vocab, _ = intent_stack
        engine = Engine(
            corpus=fixture_corpus,
            indexes=RetrievalIndexes(bm25=build_inverted_index(fixture_corpus.documents)),
            intent_model=model,
            vocab=vocab,
            stopwords=stopwords,
            scorer=Outage(),
            generator=ExtractiveStubClient(),
            exemplars=load_exemplars(),
            config=PipelineConfig(),
        )
        bad_client = TestClient(create_app(engine), raise_server_exceptions=False)
        resp = bad_client.post("/v1/query", json={"question": "ما معنى عبارة سَخَاوَة؟"})
        assert resp.status_code == 502
        assert resp.json()["retriable"] is True


class TestSearch:
    def test_ranked_documents_without_generation(self, client):
        resp = client.post("/v1/search", json={"question": "ما معنى عبارة هُنَيَّة؟", "k": 5})
        assert resp.status_code == 200
        body = resp.json()
        assert body["documents"][0]["doc_id"] == "e007"
        assert "هنياتك" in body["documents"][0]["text"]
        scores = [d["score"] for d in body["documents"]]
        assert scores == sorted(scores, reverse=True)


class TestEntry:
    def test_known_entry(self, client):
        resp = client.get("/v1/entry/e004")
        assert resp.status_code == 200
        body = resp.json()
        assert body["fields"]["word"] == "عَصَل"
        assert body["fields"]["author"] == "شاعر جاهلي"

    def test_unknown_entry_404(self, client):
        resp = client.get("/v1/entry/does-not-exist")
        assert resp.status_code == 404
        assert "does-not-exist" in resp.json()["detail"]
