"""Service configuration: JSON file, flag overrides, env vars for secrets."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .bm25 import Bm25Params
from .errors import ArtifactError
from .fusion import FusionConfig
from .pipeline import PipelineConfig, RetrievalMode


@dataclass
class ProviderConfig:
    embed_endpoint: str | None = None
    embed_model: str = ""
    embed_dim: int = 0
    embed_file: str | None = None
    rerank_endpoint: str | None = None
    rerank_model: str = ""
    llm_endpoint: str | None = None
    llm_model: str = ""


@dataclass
class ServiceConfig:
    corpus_dir: str = "corpus"
    host: str = "127.0.0.1"
    port: int = 8000
    intent_model: str | None = None
    stopwords: str | None = None
    exemplars_dir: str | None = None
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    providers: ProviderConfig = field(default_factory=ProviderConfig)

    def validate(self) -> None:
        if not (0 < self.port < 65536):
            raise ArtifactError(f"invalid port {self.port}")
        if not Path(self.corpus_dir).is_dir():
            raise ArtifactError(f"corpus directory does not exist: {self.corpus_dir}")


def _pipeline_from_table(table: dict) -> PipelineConfig:
    fusion_table = table.get("fusion", {})
    bm25_table = table.get("bm25", {})
    return PipelineConfig(
        retrieval_mode=RetrievalMode(table.get("mode", "bm25")),
        top_k=int(table.get("top_k", 10)),
        fusion=FusionConfig(
            weights=tuple(fusion_table.get("weights", (0.55, 0.45))),
            k_rrf=int(fusion_table.get("k_rrf", 60)),
        ),
        bm25=Bm25Params(
            k1=float(bm25_table.get("k1", 1.2)),
            b=float(bm25_table.get("b", 0.75)),
        ),
        intent_threshold=float(table.get("intent_threshold", 0.6)),
    )


def load_config(path=None, **overrides) -> ServiceConfig:
    """Layered config: file values first, then keyword overrides from flags."""
    data: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    config = ServiceConfig(
        corpus_dir=data.get("corpus_dir", "corpus"),
        host=data.get("host", "127.0.0.1"),
        port=int(data.get("port", 8000)),
        intent_model=data.get("intent_model"),
        stopwords=data.get("stopwords"),
        exemplars_dir=data.get("exemplars_dir"),
        pipeline=_pipeline_from_table(data.get("pipeline", {})),
        providers=ProviderConfig(**data.get("providers", {})),
    )
    for key, value in overrides.items():
        if value is None:
            continue
        if hasattr(config.providers, key):
            setattr(config.providers, key, value)
        elif hasattr(config, key):
            setattr(config, key, value)
        else:
            raise ArtifactError(f"unknown config override {key!r}")
    return config
