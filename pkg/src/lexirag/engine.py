"""Loaded artifact bundle and the per-query orchestration used by CLI and service."""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .arabic_text import StopwordList, load_stopwords
from .bm25 import load_index
from .corpus import Corpus, load_corpus
from .dense import EmbeddingProvider, FileEmbeddingProvider, HttpEmbeddingProvider, load_vectors
from .errors import ArtifactError
from .fusion import HttpRerankScorer, RerankScorer, TokenOverlapScorer
from .intent import ForestModel, TfidfVocabulary, load_intent_model
from .pipeline import (
    Answer,
    ContextBlock,
    ExemplarStore,
    ExtractiveStubClient,
    GenerationClient,
    PipelineConfig,
    QueryAnalysis,
    RetrievalIndexes,
    RetrievalMode,
    analyze_query,
    answer,
    build_prompt,
    load_exemplars,
    retrieve,
    select_fields,
)
from .ranking import RankedList

BM25_INDEX_FILE = "bm25.idx"
VECTOR_INDEX_FILE = "vectors.bin"
INTENT_MODEL_FILE = "intent_model.bin"


@dataclass(frozen=True)
class AskResult:
    answer: Answer
    analysis: QueryAnalysis
    ranked: RankedList
    contexts: tuple[ContextBlock, ...]


@dataclass
class Engine:
    corpus: Corpus
    indexes: RetrievalIndexes
    intent_model: ForestModel
    vocab: TfidfVocabulary
    stopwords: StopwordList
    scorer: RerankScorer
    generator: GenerationClient
    exemplars: ExemplarStore
    config: PipelineConfig
    embedder: EmbeddingProvider | None = None

    def _config_for(self, mode: str | None, k: int | None) -> PipelineConfig:
        config = self.config
        if mode is not None:
            config = replace(config, retrieval_mode=RetrievalMode(mode))
        if k is not None:
            config = replace(config, top_k=k)
        return config

    def analyze(self, question: str, config: PipelineConfig | None = None) -> QueryAnalysis:
        return analyze_query(
            question, self.intent_model, self.vocab, self.stopwords, config or self.config
        )

    def search(self, question: str, k: int | None = None, mode: str | None = None
               ) -> tuple[QueryAnalysis, RankedList]:
        config = self._config_for(mode, k)
        analysis = self.analyze(question, config)
        ranked = retrieve(analysis, self.indexes, self.embedder, self.scorer, self.corpus, config)
        return analysis, ranked

    def contexts_for(self, analysis: QueryAnalysis, ranked: RankedList
                     ) -> tuple[ContextBlock, ...]:
        blocks = []
        for doc_id in ranked.doc_ids:
            entry = self.corpus.entry(doc_id)
            blocks.append(select_fields(analysis.intent, entry, self.corpus.root_for(entry)))
        return tuple(blocks)

    def ask(self, question: str, mode: str | None = None, k: int | None = None) -> AskResult:
        config = self._config_for(mode, k)
        analysis = self.analyze(question, config)
        ranked = retrieve(analysis, self.indexes, self.embedder, self.scorer, self.corpus, config)
        contexts = self.contexts_for(analysis, ranked)
        bundle = build_prompt(analysis, contexts, self.exemplars, config)
        result = answer(self.generator, bundle)
        return AskResult(answer=result, analysis=analysis, ranked=ranked, contexts=contexts)


def build_providers(embed_endpoint: str | None = None, embed_model: str = "",
                    embed_dim: int = 0, embed_file=None,
                    rerank_endpoint: str | None = None, rerank_model: str = "",
                    llm_endpoint: str | None = None, llm_model: str = ""):
    """Provider trio from config values; offline stubs when no endpoints are set."""
    if embed_endpoint:
        if embed_dim < 1:
            raise ArtifactError("--embed-dim is required with --embed-endpoint")
        embedder = HttpEmbeddingProvider(embed_endpoint, embed_model, embed_dim)
    elif embed_file:
        embedder = FileEmbeddingProvider.from_jsonl(embed_file)
    else:
        embedder = None
    scorer = HttpRerankScorer(rerank_endpoint, rerank_model) if rerank_endpoint \
        else TokenOverlapScorer()
    if llm_endpoint:
        from .pipeline import HttpChatClient

        generator: GenerationClient = HttpChatClient(llm_endpoint, llm_model)
    else:
        generator = ExtractiveStubClient()
    return embedder, scorer, generator


def load_engine(corpus_dir, config: PipelineConfig | None = None,
                stopwords_path=None, exemplars_dir=None,
                intent_model_path=None,
                embedder: EmbeddingProvider | None = None,
                scorer: RerankScorer | None = None,
                generator: GenerationClient | None = None,
                require_vectors: bool = False) -> Engine:
    """Assemble an engine from a corpus directory's on-disk artifacts.

    Raises ArtifactError with the missing artifact named when something the
    requested configuration needs has not been built yet.
    """
    corpus_dir = Path(corpus_dir)
    config = config or PipelineConfig()
    corpus = load_corpus(corpus_dir)
    bm25_index = load_index(corpus_dir / BM25_INDEX_FILE)
    model_path = Path(intent_model_path) if intent_model_path else corpus_dir / INTENT_MODEL_FILE
    intent_model, vocab = load_intent_model(model_path)

    vector_path = corpus_dir / VECTOR_INDEX_FILE
    vectors = None
    if vector_path.exists():
        vectors = load_vectors(vector_path)
    elif require_vectors or config.retrieval_mode is RetrievalMode.FUSION_RERANK:
        raise ArtifactError(
            f"vector index not found at {vector_path}; run `lexirag index embed` first"
        )

    return Engine(
        corpus=corpus,
        indexes=RetrievalIndexes(bm25=bm25_index, vectors=vectors),
        intent_model=intent_model,
        vocab=vocab,
        stopwords=load_stopwords(stopwords_path),
        scorer=scorer or TokenOverlapScorer(),
        generator=generator or ExtractiveStubClient(),
        exemplars=load_exemplars(exemplars_dir),
        config=config,
        embedder=embedder,
    )
