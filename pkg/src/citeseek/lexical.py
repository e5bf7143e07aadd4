"""TF-IDF vectors and cosine-similarity top-k ranking over a candidate pool."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .corpus import Document
from .ranking import RankedList, rank_top_k
from .textproc import Vocabulary, build_vocabulary, tokenize


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized sparse vector as (term_index, weight) pairs.

    Indices are strictly increasing; the zero vector has no entries.
    """

    entries: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        previous = -1
        for index, weight in self.entries:
            if index <= previous:
                raise ValueError("indices must be strictly increasing")
            if not math.isfinite(weight):
                raise ValueError("weights must be finite")
            previous = index

    def __bool__(self) -> bool:
        return bool(self.entries)

    def norm(self) -> float:
        return math.sqrt(math.fsum(w * w for _, w in self.entries))

    def dot(self, other: SparseVector) -> float:
        if len(self.entries) > len(other.entries):
            return other.dot(self)
        weights = dict(other.entries)
        return math.fsum(
            w * weights[i] for i, w in self.entries if i in weights
        )


@dataclass(frozen=True)
class TfIdfIndex:
    """Per-pool TF-IDF index with smoothed idf and unit document vectors.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, strictly positive, so no term is
    ever dropped from the pool side. Documents whose tokenization is empty
    get a zero vector and are noted in ``diagnostics``.
    """

    vocabulary: Vocabulary
    idf: tuple[float, ...]
    doc_vectors: dict[str, SparseVector]
    diagnostics: tuple[str, ...] = ()


def _weighted_vector(
    counts: Counter[str], vocabulary: Vocabulary, idf: Sequence[float]
) -> SparseVector:
    entries = []
    for term, count in counts.items():
        entry = vocabulary.terms.get(term)
        if entry is None:
            continue
        entries.append((entry.index, count * idf[entry.index]))
    entries.sort()
    norm = math.sqrt(math.fsum(w * w for _, w in entries))
    if norm == 0.0:
        return SparseVector()
    return SparseVector(tuple((i, w / norm) for i, w in entries))


def build_index(pool: Sequence[Document]) -> TfIdfIndex:
    """Vectorize a candidate pool with term_count x idf weights, L2-normalized."""
    if not pool:
        raise ValueError("cannot index an empty pool")
    ids = [doc.id for doc in pool]
    if len(set(ids)) != len(ids):
        raise ValueError("candidate ids must be unique within the pool")
    token_lists = [tokenize(doc.text()) for doc in pool]
    vocabulary = build_vocabulary(token_lists)
    size = vocabulary.corpus_size
    idf = [0.0] * len(vocabulary)
    for term, entry in vocabulary.terms.items():
        idf[entry.index] = math.log((1 + size) / (1 + entry.doc_freq)) + 1.0
    doc_vectors: dict[str, SparseVector] = {}
    diagnostics = []
    for doc, tokens in zip(pool, token_lists):
        vector = _weighted_vector(Counter(tokens), vocabulary, idf)
        if not vector:
            diagnostics.append(f"document {doc.id!r} tokenized to nothing")
        doc_vectors[doc.id] = vector
    return TfIdfIndex(
        vocabulary=vocabulary,
        idf=tuple(idf),
        doc_vectors=doc_vectors,
        diagnostics=tuple(diagnostics),
    )


def vectorize(text: str, index: TfIdfIndex) -> SparseVector:
    """Weight a query with the index's idf; out-of-vocabulary terms drop."""
    return _weighted_vector(Counter(tokenize(text)), index.vocabulary, index.idf)


def cosine(u: SparseVector, v: SparseVector) -> float:
    """Dot product of unit vectors; the zero vector scores 0 against anything."""
    return u.dot(v)


def retrieve_topk(query: str, pool: Sequence[Document], k: int) -> RankedList:
    """Rank the pool against the query, returning the min(k, pool size) best."""
    index = build_index(pool)
    query_vector = vectorize(query, index)
    scored = [
        (doc_id, cosine(query_vector, doc_vector))
        for doc_id, doc_vector in index.doc_vectors.items()
    ]
    return rank_top_k(scored, k)
