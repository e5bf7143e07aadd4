"""Independent brute-force implementations used as test oracles.

Everything here is deliberately written from scratch against the stated
formulas (dense numpy arrays, no sparse structures, own tokenizer) so it
shares no code with the package's retrieval path.
"""

from __future__ import annotations

import math
import re

import numpy as np

_WORDS = re.compile(r"[^\W_]+", re.UNICODE)


def brute_tokens(text: str) -> list[str]:
    return _WORDS.findall(text.casefold())


def brute_tfidf_matrix(doc_texts: list[str]) -> tuple[np.ndarray, list[str]]:
    """Dense TF-IDF matrix with idf = ln((1+N)/(1+df)) + 1 and L2 rows."""
    docs = [brute_tokens(t) for t in doc_texts]
    vocab = sorted({term for doc in docs for term in doc})
    positions = {term: i for i, term in enumerate(vocab)}
    n_docs, n_terms = len(docs), len(vocab)
    counts = np.zeros((n_docs, n_terms))
    for row, doc in enumerate(docs):
        for term in doc:
            counts[row, positions[term]] += 1.0
    df = (counts > 0).sum(axis=0)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    weighted = counts * idf
    norms = np.linalg.norm(weighted, axis=1)
    nonzero = norms > 0
    weighted[nonzero] = weighted[nonzero] / norms[nonzero, None]
    return weighted, vocab


def brute_query_vector(query: str, doc_texts: list[str]) -> np.ndarray:
    docs = [brute_tokens(t) for t in doc_texts]
    vocab = sorted({term for doc in docs for term in doc})
    positions = {term: i for i, term in enumerate(vocab)}
    n_docs = len(docs)
    df = np.zeros(len(vocab))
    for i, term in enumerate(vocab):
        df[i] = sum(1 for doc in docs if term in doc)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    vec = np.zeros(len(vocab))
    for term in brute_tokens(query):
        if term in positions:
            vec[positions[term]] += 1.0
    vec = vec * idf
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def brute_rank(query: str, ids: list[str], doc_texts: list[str], k: int) -> list[tuple[str, float]]:
    """Exhaustive TF-IDF/cosine scoring with the (score desc, id asc) tie rule."""
    matrix, _ = brute_tfidf_matrix(doc_texts)
    qvec = brute_query_vector(query, doc_texts)
    scores = matrix @ qvec
    pairs = sorted(zip(ids, scores), key=lambda p: (-p[1], p[0]))
    return [(doc_id, float(score)) for doc_id, score in pairs[:k]]


def brute_hash_embedding(text: str, dim: int) -> list[float]:
    """Re-derivation of the mock embedder from its stated hashing scheme."""
    import zlib

    counts = [0.0] * dim
    for token in brute_tokens(text):
        counts[zlib.crc32(token.encode("utf-8"), 0) % dim] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    return [c / norm for c in counts] if norm > 0 else counts


def brute_rank_dense(
    query: str, ids: list[str], doc_texts: list[str], dim: int, k: int
) -> list[tuple[str, float]]:
    """Exhaustive dot-product scoring of hashed embeddings."""
    qvec = np.asarray(brute_hash_embedding(query, dim))
    scores = [float(np.dot(np.asarray(brute_hash_embedding(t, dim)), qvec)) for t in doc_texts]
    pairs = sorted(zip(ids, scores), key=lambda p: (-p[1], p[0]))
    return pairs[:k]
