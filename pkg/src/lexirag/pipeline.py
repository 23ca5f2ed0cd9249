"""Query analysis, staged retrieval, intent-routed prompt construction and generation.

Two retrieval modes are supported: lexical search followed by reranking, and
weighted rank fusion of the lexical and dense lists followed by reranking.
The detected intent selects which entry fields reach the generator and whether
the prompt carries worked exemplars. Context keeps the original diacritics.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Sequence

import httpx

from .arabic_text import StopwordList, TokenizedQuery, prepare_query
from .bm25 import Bm25Params, InvertedIndex, bm25_search
from .corpus import Corpus, LexicalEntry, RootRecord
from .dense import EmbeddingProvider, VectorIndex, embed_batch, knn_l2
from .errors import ArtifactError, GenerationError, PromptError, TransportError
from .fusion import FusionConfig, RerankScorer, rerank, rrf_fuse
from .intent import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    ForestModel,
    RoutingIntent,
    TfidfVocabulary,
    classify_intent,
)
from .ranking import RankedList

LLM_API_KEY_ENV = "LEXIRAG_LLM_API_KEY"

# Emitted verbatim by the generator when the retrieved documents do not
# contain the answer; detection of "not found" relies on exact match.
NOT_FOUND_SENTINEL = "لم يتم العثور على المعلومات في الوثائق"

SYSTEM_INSTRUCTIONS = (
    "أنت مساعد معجمي متخصص في العربية التاريخية. أجب عن السؤال اعتمادا على الوثائق "
    "المعروضة فقط، دون أي معرفة خارجية. إذا لم تتضمن الوثائق المعلومات المطلوبة "
    f"فأجب حرفيا: {NOT_FOUND_SENTINEL}"
)


class RetrievalMode(str, Enum):
    BM25_RERANK = "bm25"
    FUSION_RERANK = "fusion"


class PromptStrategy(str, Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"


# Prompting strategy per routing intent: interpretation-heavy intents get
# worked exemplars, extraction-style intents stay zero-shot.
DEFAULT_PROMPTING: dict[RoutingIntent, PromptStrategy] = {
    RoutingIntent.MEANING: PromptStrategy.FEW_SHOT,
    RoutingIntent.AUTHOR: PromptStrategy.FEW_SHOT,
    RoutingIntent.CONTEXTUAL: PromptStrategy.FEW_SHOT,
    RoutingIntent.MORPHOLOGY: PromptStrategy.FEW_SHOT,
    RoutingIntent.DATE: PromptStrategy.ZERO_SHOT,
    RoutingIntent.SOURCE: PromptStrategy.ZERO_SHOT,
    RoutingIntent.ETYMOLOGY: PromptStrategy.ZERO_SHOT,
    RoutingIntent.INSCRIPTIONS: PromptStrategy.ZERO_SHOT,
    RoutingIntent.OTHER: PromptStrategy.ZERO_SHOT,
}

ENTRY_CONTEXT_FIELDS = (
    "word",
    "compound_form",
    "root",
    "root_id",
    "lemma_id",
    "morphology",
    "date_label",
    "citation",
    "author",
    "source_title",
    "surah",
    "ayah",
    "hadith_ref",
    "semantic_field",
    "meaning",
)

# Field subset handed to the generator for each routing intent.
INTENT_FIELDS: dict[RoutingIntent, tuple[str, ...]] = {
    RoutingIntent.MEANING: ("compound_form", "citation", "semantic_field", "meaning"),
    RoutingIntent.AUTHOR: ("word", "compound_form", "citation", "author"),
    RoutingIntent.DATE: ("word", "compound_form", "citation", "date_label"),
    RoutingIntent.SOURCE: ("word", "compound_form", "source_title", "surah", "ayah", "hadith_ref"),
    RoutingIntent.CONTEXTUAL: ("compound_form", "citation", "semantic_field", "meaning"),
    RoutingIntent.MORPHOLOGY: ("root", "morphology", "word", "lemma_id"),
    RoutingIntent.ETYMOLOGY: ("root", "root_id", "etymology"),
    RoutingIntent.INSCRIPTIONS: ("root", "root_id", "inscriptions"),
    RoutingIntent.OTHER: ENTRY_CONTEXT_FIELDS + ("etymology", "inscriptions"),
}


@dataclass(frozen=True)
class PipelineConfig:
    retrieval_mode: RetrievalMode = RetrievalMode.BM25_RERANK
    top_k: int = 10
    fusion: FusionConfig = field(default_factory=FusionConfig)
    bm25: Bm25Params = field(default_factory=Bm25Params)
    intent_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    prompting: dict[RoutingIntent, PromptStrategy] = field(
        default_factory=lambda: dict(DEFAULT_PROMPTING)
    )

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        missing = [i.value for i in RoutingIntent if i not in self.prompting]
        if missing:
            raise ValueError(f"prompting map missing intents: {missing}")


@dataclass(frozen=True)
class QueryAnalysis:
    tokenized: TokenizedQuery
    intent: RoutingIntent
    confidence: float


def analyze_query(query: str, model: ForestModel, vocab: TfidfVocabulary,
                  stopwords: StopwordList, config: PipelineConfig) -> QueryAnalysis:
    """Noise reduction, term weighting and intent classification over a raw query."""
    tokenized = prepare_query(query, stopwords)
    intent, confidence = classify_intent(model, vocab, query, config.intent_threshold)
    return QueryAnalysis(tokenized=tokenized, intent=intent, confidence=confidence)


def _block_text(block) -> str | None:
    if not block:
        return None
    return "؛ ".join(f"{key}: {value}" for key, value in block.items())


@dataclass(frozen=True)
class ContextBlock:
    """Field-filtered rendering of one retrieved entry, diacritics preserved."""

    doc_id: str
    fields: tuple[tuple[str, str | None], ...]

    def field_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.fields)

    def present_fields(self) -> dict[str, str]:
        return {name: value for name, value in self.fields if value}

    def render(self) -> str:
        lines = [f"[{self.doc_id}]"]
        lines.extend(f"{name}: {value}" for name, value in self.fields if value)
        return "\n".join(lines)


def select_fields(intent: RoutingIntent, entry: LexicalEntry, root: RootRecord) -> ContextBlock:
    """Emit exactly the intent's field subset; absent values stay empty."""
    source: dict[str, str | None] = {name: getattr(entry, name) for name in ENTRY_CONTEXT_FIELDS}
    source["etymology"] = _block_text(root.etymology)
    source["inscriptions"] = _block_text(root.inscriptions)
    names = INTENT_FIELDS[intent]
    return ContextBlock(doc_id=entry.entry_id, fields=tuple((n, source[n]) for n in names))


@dataclass(frozen=True)
class Exemplar:
    question: str
    context: str
    answer: str


@dataclass(frozen=True)
class ExemplarStore:
    by_intent: dict[RoutingIntent, tuple[Exemplar, ...]]

    def get(self, intent: RoutingIntent) -> tuple[Exemplar, ...]:
        return self.by_intent.get(intent, ())


def _parse_exemplars(text: str) -> list[Exemplar]:
    exemplars = []
    for chunk in re.split(r"^---\s*$", text, flags=re.MULTILINE):
        if not chunk.strip():
            continue
        parts: dict[str, list[str]] = {"Q": [], "C": [], "A": []}
        current = None
        for line in chunk.strip().splitlines():
            marker = line[:2]
            if marker in ("Q:", "C:", "A:"):
                current = marker[0]
                parts[current].append(line[2:].strip())
            elif current:
                parts[current].append(line.strip())
        if parts["Q"] and parts["A"]:
            exemplars.append(
                Exemplar(
                    question=" ".join(parts["Q"]).strip(),
                    context="\n".join(parts["C"]).strip(),
                    answer=" ".join(parts["A"]).strip(),
                )
            )
    return exemplars


def load_exemplars(directory=None) -> ExemplarStore:
    """Per-intent worked examples from editable text files (Q:/C:/A: blocks)."""
    by_intent: dict[RoutingIntent, tuple[Exemplar, ...]] = {}
    if directory is None:
        base = resources.files("lexirag.data").joinpath("exemplars")
        paths = [(RoutingIntent(p.name[: -len(".txt")]), p)
                 for p in base.iterdir() if p.name.endswith(".txt")]
    else:
        base = Path(directory)
        paths = [(RoutingIntent(p.stem), p) for p in sorted(base.glob("*.txt"))]
    for intent, path in paths:
        by_intent[intent] = tuple(_parse_exemplars(path.read_text("utf-8")))
    return ExemplarStore(by_intent=by_intent)


@dataclass(frozen=True)
class PromptBundle:
    system_instructions: str
    context_blocks: tuple[ContextBlock, ...]
    exemplars: tuple[Exemplar, ...]
    user_question: str
    intent: RoutingIntent = RoutingIntent.OTHER

    def render(self) -> str:
        parts = [self.system_instructions]
        for i, ex in enumerate(self.exemplars, start=1):
            parts.append(f"مثال {i}:\nالسؤال: {ex.question}\nالوثائق:\n{ex.context}\nالجواب: {ex.answer}")
        blocks = "\n\n".join(block.render() for block in self.context_blocks)
        parts.append(f"الوثائق:\n{blocks}" if blocks else "الوثائق: (لا وثائق)")
        parts.append(f"السؤال: {self.user_question}\nالجواب:")
        return "\n\n".join(parts)


def build_prompt(analysis: QueryAnalysis, contexts: Sequence[ContextBlock],
                 exemplar_store: ExemplarStore, config: PipelineConfig) -> PromptBundle:
    """Assemble the generation prompt; few-shot intents require stored exemplars."""
    strategy = config.prompting[analysis.intent]
    if strategy is PromptStrategy.FEW_SHOT:
        exemplars = exemplar_store.get(analysis.intent)
        if not exemplars:
            raise PromptError(f"no exemplars available for few-shot intent {analysis.intent.value}")
    else:
        exemplars = ()
    return PromptBundle(
        system_instructions=SYSTEM_INSTRUCTIONS,
        context_blocks=tuple(contexts),
        exemplars=exemplars,
        user_question=analysis.tokenized.raw,
        intent=analysis.intent,
    )


class GenerationClient:
    """Behavioral contract: deterministic completion at temperature zero."""

    temperature = 0.0
    name = "base"

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


class HttpChatClient(GenerationClient):
    """Chat-completions wire contract; temperature 0 is sent on every call."""

    def __init__(self, endpoint: str, model: str, api_key_env: str = LLM_API_KEY_ENV,
                 client: httpx.Client | None = None, timeout: float = 60.0):
        self.name = f"http:{model}"
        self.endpoint = endpoint
        self.model = model
        self._api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self._api_key_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def complete(self, prompt: str) -> str:
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = self._client.post(self.endpoint, json=body, headers=self._headers())
            resp.raise_for_status()
            payload = resp.json()
        except httpx.HTTPError as exc:
            raise TransportError(f"generation request failed: {exc}") from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GenerationError(f"malformed generation response: {exc}") from exc


class ExtractiveStubClient(GenerationClient):
    """Offline generator: copies the best answer-bearing field of the first context.

    Context blocks are already field-filtered per intent, so scanning a fixed
    priority list of field labels yields the value that answers the question.
    Returns the not-found sentinel when nothing extractable is present.
    """

    name = "extractive-stub"
    FIELD_PRIORITY = (
        "meaning",
        "author",
        "date_label",
        "source_title",
        "hadith_ref",
        "surah",
        "morphology",
        "etymology",
        "inscriptions",
        "word",
    )

    def complete(self, prompt: str) -> str:
        section = prompt.split("الوثائق:\n")[-1]
        first_block = section.split("\n\n")[0]
        lines = first_block.splitlines()
        for wanted in self.FIELD_PRIORITY:
            for line in lines:
                if line.startswith(f"{wanted}: "):
                    return line[len(wanted) + 2 :]
        return NOT_FOUND_SENTINEL


@dataclass(frozen=True)
class Answer:
    text: str
    intent: RoutingIntent
    supporting_doc_ids: tuple[str, ...]
    not_found: bool


def answer(client: GenerationClient, bundle: PromptBundle) -> Answer:
    text = client.complete(bundle.render())
    if not text or not text.strip():
        raise GenerationError("generation client returned an empty completion")
    return Answer(
        text=text,
        intent=bundle.intent,
        supporting_doc_ids=tuple(block.doc_id for block in bundle.context_blocks),
        not_found=text.strip() == NOT_FOUND_SENTINEL,
    )


@dataclass
class RetrievalIndexes:
    bm25: InvertedIndex
    vectors: VectorIndex | None = None


def retrieve(analysis: QueryAnalysis, indexes: RetrievalIndexes,
             embedder: EmbeddingProvider | None, scorer: RerankScorer,
             corpus: Corpus, config: PipelineConfig) -> RankedList:
    """Stage-1 candidates per the configured mode, then reranking; <= top_k results."""
    lexical = bm25_search(indexes.bm25, analysis.tokenized, config.bm25, config.top_k)
    if config.retrieval_mode is RetrievalMode.BM25_RERANK:
        candidates = lexical
    else:
        if indexes.vectors is None:
            raise ArtifactError(
                "fusion mode needs the dense vector index; run `lexirag index embed` first"
            )
        dense_list = RankedList()
        if len(indexes.vectors) and analysis.tokenized.tokens:
            if embedder is None:
                raise ArtifactError("fusion mode needs an embedding provider")
            query_vec = embed_batch(embedder, [analysis.tokenized.text])[0]
            dense_list = knn_l2(indexes.vectors, query_vec, config.top_k)
        candidates = rrf_fuse([lexical, dense_list], config.fusion).truncated(config.top_k)
    return rerank(scorer, analysis.tokenized.text, candidates, corpus)
