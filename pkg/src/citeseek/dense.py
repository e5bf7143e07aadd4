"""Embedding-based top-k ranking behind a provider contract.

Two providers: a remote HTTP embeddings endpoint speaking the common
``{"model", "input": [...]}`` -> ``{"data": [{"index", "embedding"}]}`` wire
format, and a deterministic offline mock that feature-hashes tokens into a
fixed number of buckets. All test-path behaviour runs on the mock.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import httpx
import numpy as np

from .corpus import Document
from .ranking import RankedList, rank_top_k
from .textproc import tokenize

log = logging.getLogger(__name__)

MOCK_HASH_SEED = 0


class EmbeddingError(Exception):
    """Raised when an embedding provider fails or returns malformed data."""


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str  # "remote" or "mock"
    endpoint: str | None = None
    model_name: str | None = None
    dim: int = 256
    timeout: float = 30.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    max_in_flight: int = 4
    batch_size: int = 128
    auth_env: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("remote", "mock"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind == "remote" and not (self.endpoint and self.model_name):
            raise ValueError("remote provider requires endpoint and model_name")

    @classmethod
    def from_file(cls, path: str | Path) -> EmbeddingProviderConfig:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: embedder config must be an object")
        return cls(**data)


@dataclass(frozen=True)
class EmbeddingVector:
    """Unit-norm embedding (or the zero vector for empty inputs)."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("embedding must have at least one dimension")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")
        norm = math.sqrt(math.fsum(v * v for v in self.values))
        if norm != 0.0 and abs(norm - 1.0) > 1e-9:
            raise ValueError(f"embedding norm {norm} is neither 0 nor 1")

    @property
    def dim(self) -> int:
        return len(self.values)

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)

    @classmethod
    def normalized(cls, raw: Sequence[float]) -> EmbeddingVector:
        """Scale a raw vector to unit norm; the zero vector stays zero."""
        arr = np.asarray(raw, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding values must be finite")
        norm = float(np.linalg.norm(arr))
        if norm > 0.0:
            arr = arr / norm
        return cls(values=tuple(float(v) for v in arr))


def _mock_embed_one(text: str, dim: int) -> EmbeddingVector:
    counts = [0.0] * dim
    for token in tokenize(text):
        bucket = zlib.crc32(token.encode("utf-8"), MOCK_HASH_SEED) % dim
        counts[bucket] += 1.0
    vector = EmbeddingVector.normalized(counts)
    if vector.is_zero():
        log.warning("text %.40r produced no tokens; embedding it as the zero vector", text)
    return vector


def _auth_headers(provider: EmbeddingProviderConfig) -> dict[str, str]:
    if provider.auth_env:
        token = os.environ.get(provider.auth_env, "")
        if token:
            return {"Authorization": f"Bearer {token}"}
    return {}


def _remote_embed_batch(
    client: httpx.Client,
    provider: EmbeddingProviderConfig,
    batch: Sequence[str],
) -> list[EmbeddingVector]:
    payload = {"model": provider.model_name, "input": list(batch)}
    last_error: Exception | None = None
    for attempt in range(1, provider.max_attempts + 1):
        try:
            response = client.post(provider.endpoint, json=payload)
        except httpx.TransportError as exc:
            last_error = exc
        else:
            if response.status_code in (429,) or response.status_code >= 500:
                last_error = EmbeddingError(
                    f"embedding endpoint returned {response.status_code}: "
                    f"{response.text[:200]}"
                )
            elif response.status_code >= 300:
                raise EmbeddingError(
                    f"embedding endpoint returned {response.status_code}: "
                    f"{response.text[:200]}"
                )
            else:
                return _parse_embedding_response(response, provider, len(batch))
        if attempt < provider.max_attempts:
            time.sleep(provider.backoff_base * 2 ** (attempt - 1))
    raise EmbeddingError(
        f"embedding request failed after {provider.max_attempts} attempts: {last_error}"
    )


def _parse_embedding_response(
    response: httpx.Response,
    provider: EmbeddingProviderConfig,
    expected: int,
) -> list[EmbeddingVector]:
    try:
        data = response.json()["data"]
    except (KeyError, ValueError) as exc:
        raise EmbeddingError(f"malformed embedding response: {exc}") from exc
    if not isinstance(data, list) or len(data) != expected:
        actual = len(data) if isinstance(data, list) else "non-list"
        raise EmbeddingError(
            f"embedding count mismatch: expected {expected}, got {actual}"
        )
    rows: list[list[float]] = [[] for _ in range(expected)]
    for item in data:
        try:
            rows[int(item["index"])] = item["embedding"]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise EmbeddingError(f"malformed embedding response: {exc}") from exc
    vectors = []
    for row in rows:
        if len(row) != provider.dim:
            raise EmbeddingError(
                f"embedding dimension mismatch: expected {provider.dim}, got {len(row)}"
            )
        try:
            vector = EmbeddingVector.normalized(row)
        except ValueError as exc:
            raise EmbeddingError(str(exc)) from exc
        if vector.is_zero():
            log.warning("provider returned a zero embedding")
        vectors.append(vector)
    return vectors


def embed(
    texts: Sequence[str],
    provider: EmbeddingProviderConfig,
    *,
    transport: httpx.BaseTransport | None = None,
) -> list[EmbeddingVector]:
    """Embed texts in order, L2-normalizing every vector on receipt.

    The mock provider hashes each token into one of ``dim`` buckets with a
    stable non-cryptographic hash (crc32, seed 0), accumulates counts, and
    normalizes; it is a pure function of the input. Remote batches are capped
    at ``batch_size`` and issued with at most ``max_in_flight`` concurrent
    requests, with results reassembled in input order.
    """
    if not texts:
        raise ValueError("texts must be non-empty")
    if provider.kind == "mock":
        return [_mock_embed_one(text, provider.dim) for text in texts]
    batches = [
        texts[start : start + provider.batch_size]
        for start in range(0, len(texts), provider.batch_size)
    ]
    with httpx.Client(
        timeout=provider.timeout, transport=transport, headers=_auth_headers(provider)
    ) as client:
        if len(batches) == 1:
            results = [_remote_embed_batch(client, provider, batches[0])]
        else:
            workers = min(provider.max_in_flight, len(batches))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(lambda b: _remote_embed_batch(client, provider, b), batches)
                )
    return [vector for batch in results for vector in batch]


@dataclass(frozen=True, eq=False)
class VectorStore:
    """Document embeddings for one pool, row-aligned with ``ids``."""

    ids: tuple[str, ...]
    matrix: np.ndarray
    dim: int

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.ids

    def vector(self, doc_id: str) -> EmbeddingVector:
        row = self.matrix[self.ids.index(doc_id)]
        return EmbeddingVector(values=tuple(float(v) for v in row))


def build_store(
    pool: Sequence[Document],
    provider: EmbeddingProviderConfig,
    *,
    transport: httpx.BaseTransport | None = None,
) -> VectorStore:
    """Embed every document's title + abstract into one store."""
    if not pool:
        raise ValueError("cannot embed an empty pool")
    ids = tuple(doc.id for doc in pool)
    if len(set(ids)) != len(ids):
        raise ValueError("candidate ids must be unique within the pool")
    vectors = embed([doc.text() for doc in pool], provider, transport=transport)
    matrix = np.array([v.values for v in vectors], dtype=np.float64)
    return VectorStore(ids=ids, matrix=matrix, dim=provider.dim)


def retrieve_topk_dense(
    query: str,
    store: VectorStore,
    provider: EmbeddingProviderConfig,
    k: int,
    *,
    transport: httpx.BaseTransport | None = None,
) -> RankedList:
    """Rank stored documents by cosine against the embedded query."""
    if len(store) == 0:
        raise ValueError("vector store is empty")
    query_vector = embed([query], provider, transport=transport)[0]
    if query_vector.dim != store.dim:
        raise EmbeddingError(
            f"query dimension {query_vector.dim} != store dimension {store.dim}"
        )
    scores = store.matrix @ np.asarray(query_vector.values)
    scores = np.clip(scores, -1.0, 1.0)
    return rank_top_k(zip(store.ids, (float(s) for s in scores)), k)
