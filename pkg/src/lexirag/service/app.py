"""FastAPI application wrapping a loaded engine."""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..corpus import ENTRY_FIELDS
from ..engine import Engine
from ..errors import ArtifactError, NotFoundError, TransportError
from .schemas import (
    DocumentHit,
    EntryResponse,
    HealthResponse,
    QueryRequest,
    QueryResponse,
    SearchHit,
    SearchRequest,
    SearchResponse,
)


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="lexirag", description="Dictionary-grounded question answering")

    @app.exception_handler(NotFoundError)
    async def not_found(request: Request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(TransportError)
    async def provider_outage(request: Request, exc: TransportError):
        return JSONResponse(
            status_code=502,
            content={"detail": f"upstream provider failed: {exc}", "retriable": True},
        )

    @app.exception_handler(ArtifactError)
    async def missing_artifact(request: Request, exc: ArtifactError):
        return JSONResponse(status_code=503, content={"detail": str(exc)})

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(status="ok", corpus_size=len(engine.corpus.entries))

    @app.post("/v1/query", response_model=QueryResponse)
    def query(req: QueryRequest):
        if req.mode is not None and req.mode not in ("bm25", "fusion"):
            return JSONResponse(
                status_code=422,
                content={"detail": f"mode must be 'bm25' or 'fusion', got {req.mode!r}"},
            )
        result = engine.ask(req.question, mode=req.mode, k=req.k)
        score_by_id = dict(result.ranked.items)
        documents = [
            DocumentHit(
                doc_id=block.doc_id,
                score=score_by_id[block.doc_id],
                fields=block.present_fields(),
            )
            for block in result.contexts
        ]
        return QueryResponse(
            answer=result.answer.text,
            not_found=result.answer.not_found,
            intent=result.analysis.intent.value,
            confidence=result.analysis.confidence,
            documents=documents,
        )

    @app.post("/v1/search", response_model=SearchResponse)
    def search(req: SearchRequest):
        analysis, ranked = engine.search(req.question, k=req.k)
        documents = [
            SearchHit(doc_id=doc_id, score=score, text=engine.corpus.document(doc_id).text)
            for doc_id, score in ranked
        ]
        return SearchResponse(
            intent=analysis.intent.value,
            confidence=analysis.confidence,
            documents=documents,
        )

    @app.get("/v1/entry/{entry_id}", response_model=EntryResponse)
    def entry(entry_id: str):
        record = engine.corpus.entry(entry_id)
        fields = {
            name: getattr(record, name)
            for name in ENTRY_FIELDS
            if getattr(record, name)
        }
        return EntryResponse(entry_id=record.entry_id, fields=fields)

    return app
