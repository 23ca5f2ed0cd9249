"""Pydantic request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class QueryRequest(BaseModel):
    question: str
    mode: str | None = Field(default=None, description="bm25 or fusion")
    k: int | None = Field(default=None, ge=1)


class DocumentHit(BaseModel):
    doc_id: str
    score: float
    fields: dict[str, str]


class QueryResponse(BaseModel):
    answer: str
    not_found: bool
    intent: str
    confidence: float
    documents: list[DocumentHit]


class SearchRequest(BaseModel):
    question: str
    k: int = Field(default=10, ge=1)


class SearchHit(BaseModel):
    doc_id: str
    score: float
    text: str


class SearchResponse(BaseModel):
    intent: str
    confidence: float
    documents: list[SearchHit]


class EntryResponse(BaseModel):
    entry_id: str
    fields: dict[str, str]


class HealthResponse(BaseModel):
    status: str
    corpus_size: int
