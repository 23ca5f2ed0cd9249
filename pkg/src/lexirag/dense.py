"""Embedding provider contracts and an exact flat L2 nearest-neighbor index.

The index keeps every vector uncompressed and scans all of them per query,
so results are exact by construction. Scores in the returned ranked list are
negated squared distances (closest first, ties by ascending doc_id).
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import httpx
import numpy as np

from .errors import ArtifactError, NotFoundError, ProviderContractError, TransportError
from .ranking import RankedList

VECTOR_MAGIC = b"LXRGVEC1"
VECTOR_VERSION = 1
EMBED_API_KEY_ENV = "LEXIRAG_EMBED_API_KEY"


class EmbeddingProvider:
    """Behavioral contract: embed n texts into n vectors of fixed dimension."""

    name: str = "base"
    dimension: int = 0

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        raise NotImplementedError


def embed_batch(provider: EmbeddingProvider, texts: Sequence[str]) -> list[list[float]]:
    """Embed texts, enforcing the provider's declared dimension."""
    vectors = provider.embed(list(texts))
    if len(vectors) != len(texts):
        raise ProviderContractError(
            f"provider {provider.name!r} returned {len(vectors)} vectors for {len(texts)} texts"
        )
    for vec in vectors:
        if len(vec) != provider.dimension:
            raise ProviderContractError(
                f"provider {provider.name!r} returned a {len(vec)}-dim vector, "
                f"declared dimension is {provider.dimension}"
            )
    return vectors


class FileEmbeddingProvider(EmbeddingProvider):
    """Deterministic text -> vector lookup loaded from a JSONL pair file."""

    def __init__(self, dimension: int, mapping: dict[str, Sequence[float]], name: str = "file"):
        self.name = name
        self.dimension = int(dimension)
        self._mapping = {text: list(map(float, vec)) for text, vec in mapping.items()}

    @classmethod
    def from_jsonl(cls, path) -> "FileEmbeddingProvider":
        mapping: dict[str, list[float]] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                vec = [float(x) for x in rec["vector"]]
                mapping[rec["text"]] = vec
                dim = len(vec) if dim is None else dim
        if dim is None:
            raise ArtifactError(f"{path}: embedding pair file is empty")
        return cls(dimension=dim, mapping=mapping, name=f"file:{Path(path).name}")

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            try:
                out.append(list(self._mapping[text]))
            except KeyError:
                raise NotFoundError(f"no registered embedding for text {text[:60]!r}") from None
        return out


class HttpEmbeddingProvider(EmbeddingProvider):
    """Minimal embeddings wire contract: POST {model, input: [...]}."""

    def __init__(self, endpoint: str, model: str, dimension: int,
                 api_key_env: str = EMBED_API_KEY_ENV, client: httpx.Client | None = None,
                 timeout: float = 30.0):
        self.name = f"http:{model}"
        self.endpoint = endpoint
        self.model = model
        self.dimension = int(dimension)
        self._api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self._api_key_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        body = {"model": self.model, "input": list(texts)}
        try:
            resp = self._client.post(self.endpoint, json=body, headers=self._headers())
            resp.raise_for_status()
            payload = resp.json()
        except httpx.HTTPError as exc:
            raise TransportError(f"embedding request failed: {exc}") from exc
        try:
            return [[float(x) for x in item["embedding"]] for item in payload["data"]]
        except (KeyError, TypeError) as exc:
            raise ProviderContractError(f"malformed embeddings response: {exc}") from exc


@dataclass(frozen=True)
class VectorIndex:
    dimension: int
    ids: tuple[str, ...]
    matrix: np.ndarray  # (n, dimension) float32

    def __len__(self) -> int:
        return len(self.ids)


def build_vector_index(vectors, ids: Sequence[str]) -> VectorIndex:
    ids = tuple(str(i) for i in ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate doc ids in vector index input")
    matrix = np.asarray(vectors, dtype=np.float32)
    if matrix.ndim == 1 and matrix.size == 0:
        matrix = matrix.reshape(0, 0)
    if matrix.shape[0] != len(ids):
        raise ValueError(f"{matrix.shape[0]} vectors for {len(ids)} ids")
    if len(ids) and matrix.ndim != 2:
        raise ValueError("vectors must share a single dimension")
    dim = int(matrix.shape[1]) if len(ids) else 0
    return VectorIndex(dimension=dim, ids=ids, matrix=matrix)


def knn_l2(index: VectorIndex, query, k: int) -> RankedList:
    """min(k, size) nearest ids by squared L2 distance (exact, full scan)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        return RankedList()
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.shape[0] != index.dimension:
        raise ValueError(f"query dimension {q.shape[0]} != index dimension {index.dimension}")
    diffs = index.matrix.astype(np.float64) - q
    dists = np.einsum("ij,ij->i", diffs, diffs)
    order = sorted(range(len(index)), key=lambda i: (dists[i], index.ids[i]))[:k]
    return RankedList(tuple((index.ids[i], -float(dists[i])) for i in order))


def save_vectors(path, index: VectorIndex) -> None:
    with open(path, "wb") as fh:
        fh.write(VECTOR_MAGIC)
        fh.write(struct.pack("<IIQ", VECTOR_VERSION, index.dimension, len(index)))
        for doc_id in index.ids:
            raw = doc_id.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(index.matrix, dtype="<f4").tobytes())


def load_vectors(path) -> VectorIndex:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"vector index not found at {path}; run `lexirag index embed` first")
    data = path.read_bytes()
    if data[: len(VECTOR_MAGIC)] != VECTOR_MAGIC:
        raise ArtifactError(f"{path}: unrecognized vector store header")
    offset = len(VECTOR_MAGIC)
    version, dim, count = struct.unpack_from("<IIQ", data, offset)
    if version != VECTOR_VERSION:
        raise ArtifactError(f"{path}: unsupported vector store version {version}")
    offset += struct.calcsize("<IIQ")
    ids = []
    for _ in range(count):
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        ids.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    matrix = np.frombuffer(data, dtype="<f4", count=count * dim, offset=offset)
    matrix = matrix.reshape(count, dim).copy()
    return VectorIndex(dimension=int(dim), ids=tuple(ids), matrix=matrix)
