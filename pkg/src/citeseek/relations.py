"""LLM relation-triple extraction and triple-guided retrieval.

A paragraph goes through an extraction prompt, the model's reply is parsed
into (subject, predicate, object) triples, and their rendered text replaces
the raw paragraph as the retrieval query. Parsing is total: any reply,
however malformed, yields a result whose emptiness is explained by warnings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import cache
from importlib import resources
from typing import Sequence

from .corpus import Document
from .dense import EmbeddingProviderConfig, build_store, retrieve_topk_dense
from .gateway import ChatRequest, LlmGateway
from .lexical import retrieve_topk
from .ranking import RankedList

EXTRACTION_TEMPLATE = "relation_extraction_v1"
MAX_TRIPLES = 15

# Leading list markers stripped repeatedly, so parsed fields can never
# start with one (keeps format -> parse stable).
_LIST_MARKER_RE = re.compile(r"^(?:[-*•]+\s+|\(?\d{1,3}[.)]\s+)")


@cache
def load_template(name: str) -> str:
    return (
        resources.files("citeseek").joinpath(f"templates/{name}.txt").read_text("utf-8")
    )


@dataclass(frozen=True)
class RelationTriple:
    subject: str
    predicate: str
    object: str

    def __post_init__(self) -> None:
        for value in (self.subject, self.predicate, self.object):
            if not value.strip():
                raise ValueError("triple fields must be non-empty")
            if "\n" in value or "\r" in value:
                raise ValueError("triple fields must not contain line breaks")


@dataclass(frozen=True)
class ExtractionResult:
    triples: tuple[RelationTriple, ...]
    raw_response: str
    parse_warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.triples and not self.parse_warnings:
            raise ValueError("an empty extraction must carry a warning")


def build_extraction_prompt(paragraph: str) -> str:
    """Fill the extraction template with the paragraph, verbatim."""
    if not paragraph.strip():
        raise ValueError("paragraph must be non-empty")
    return load_template(EXTRACTION_TEMPLATE).replace("{paragraph}", paragraph)


def _strip_list_marker(line: str) -> str:
    previous = None
    while previous != line:
        previous = line
        line = _LIST_MARKER_RE.sub("", line).lstrip()
    return line


def parse_triples(raw: str) -> ExtractionResult:
    """Parse ``subject | predicate | object`` lines; total, never raises.

    Lines with a leading number or bullet are cleaned first; lines without
    exactly two delimiters, or with a blank field, are skipped with one
    warning each. Exact duplicates keep their first occurrence.
    """
    if not raw.strip():
        return ExtractionResult((), raw, ("empty response",))
    triples: list[RelationTriple] = []
    warnings: list[str] = []
    seen: set[RelationTriple] = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = _strip_list_marker(line.strip())
        if not line:
            continue
        if line.count("|") != 2:
            warnings.append(f"line {lineno}: skipped malformed line {line[:60]!r}")
            continue
        subject, predicate, obj = (part.strip() for part in line.split("|"))
        if not (subject and predicate and obj):
            warnings.append(f"line {lineno}: skipped triple with an empty field")
            continue
        triple = RelationTriple(subject, predicate, obj)
        if triple in seen:
            warnings.append(f"line {lineno}: dropped duplicate triple")
            continue
        seen.add(triple)
        triples.append(triple)
    if not triples and not warnings:
        warnings.append("no triples found")
    return ExtractionResult(tuple(triples), raw, tuple(warnings))


def format_triple_lines(triples: Sequence[RelationTriple]) -> str:
    """Canonical one-triple-per-line form; parse_triples inverts it."""
    return "\n".join(f"{t.subject} | {t.predicate} | {t.object}" for t in triples)


def render_relation_query(triples: Sequence[RelationTriple]) -> str:
    """Join triples into retrieval-query text: "s p o. s p o"."""
    return ". ".join(f"{t.subject} {t.predicate} {t.object}" for t in triples)


def relation_retrieve(
    paragraph: str,
    pool: Sequence[Document],
    k: int,
    gateway: LlmGateway,
    *,
    scorer: str = "tfidf",
    embedder: EmbeddingProviderConfig | None = None,
) -> tuple[RankedList, ExtractionResult]:
    """Extract triples from the paragraph and score their rendering over the pool.

    When no triple parses, the raw paragraph is scored instead and the
    fallback is recorded as a warning, so the ranking is never empty.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not pool:
        raise ValueError("pool must be non-empty")
    if scorer not in ("tfidf", "dense"):
        raise ValueError(f"unknown scorer {scorer!r}")
    if scorer == "dense" and embedder is None:
        raise ValueError("dense scoring requires an embedding provider")
    response = gateway.complete(ChatRequest(user_text=build_extraction_prompt(paragraph)))
    result = parse_triples(response.text)
    if result.triples:
        query = render_relation_query(result.triples)
    else:
        query = paragraph
        result = replace(
            result,
            parse_warnings=result.parse_warnings
            + ("no triples parsed; fell back to scoring the raw paragraph",),
        )
    if scorer == "dense":
        store = build_store(pool, embedder)
        ranked = retrieve_topk_dense(query, store, embedder, k)
    else:
        ranked = retrieve_topk(query, pool, k)
    return ranked, result
