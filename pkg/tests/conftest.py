from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from lexirag.arabic_text import load_stopwords
from lexirag.bm25 import build_inverted_index
from lexirag.corpus import ingest_files
from lexirag.datagen import generate_intent_dataset, generate_qa
from lexirag.dense import build_vector_index
from lexirag.engine import Engine
from lexirag.fusion import TokenOverlapScorer
from lexirag.intent import fit_tfidf, train_forest, vectorize
from lexirag.pipeline import (
    ExtractiveStubClient,
    PipelineConfig,
    RetrievalIndexes,
    load_exemplars,
)

from tests.synth import HashEmbeddingProvider, build_synth_corpus

FIXTURE_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture(scope="session")
def fixture_corpus():
    return ingest_files(FIXTURE_DIR / "entries.jsonl", FIXTURE_DIR / "roots.jsonl")


@pytest.fixture(scope="session")
def synth_corpus():
    return build_synth_corpus(n_entries=200, seed=11)


@pytest.fixture(scope="session")
def qa_result(synth_corpus):
    return generate_qa(synth_corpus, seed=7)


@pytest.fixture(scope="session")
def intent_stack(qa_result):
    """A modest forest trained on synthetic template data (fast, shared)."""
    dataset = generate_intent_dataset(qa_result.items, per_class=60, seed=3,
                                      test_fraction=1 / 6)
    questions = [q for q, _ in dataset.train]
    labels = [label for _, label in dataset.train]
    vocab = fit_tfidf(questions)
    features = np.stack([vectorize(vocab, q) for q in questions])
    model = train_forest(features, labels, n_trees=100, seed=5)
    return model, vocab, dataset


@pytest.fixture(scope="session")
def synth_engine(synth_corpus, intent_stack, stopwords):
    """Full engine over the synthetic corpus with offline providers."""
    model, vocab, _ = intent_stack
    embedder = HashEmbeddingProvider(dim=32)
    doc_texts = [doc.text for doc in synth_corpus.documents]
    vectors = embedder.embed(doc_texts)
    vec_index = build_vector_index(vectors, [d.doc_id for d in synth_corpus.documents])
    return Engine(
        corpus=synth_corpus,
        indexes=RetrievalIndexes(
            bm25=build_inverted_index(synth_corpus.documents), vectors=vec_index
        ),
        intent_model=model,
        vocab=vocab,
        stopwords=stopwords,
        scorer=TokenOverlapScorer(),
        generator=ExtractiveStubClient(),
        exemplars=load_exemplars(),
        config=PipelineConfig(),
        embedder=embedder,
    )
