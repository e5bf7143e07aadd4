"""Two-step citation prediction: retrieve top-k, then ask an LLM to choose.

Stage 1 ranks the candidate pool with the chosen retriever. Stage 2 presents
the ranked subset to the LLM and parses the chosen ids out of its reply; the
selection can only ever pick among retrieved candidates, and a top-1 fallback
keeps every prediction non-empty. Retrieval-only mode skips stage 2 and
predicts the whole retrieved set.
"""

from __future__ import annotations

import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .corpus import Dataset, Document, QueryInstance
from .dense import EmbeddingError, EmbeddingProviderConfig, build_store, retrieve_topk_dense
from .gateway import ChatRequest, GatewayError, LlmGateway
from .lexical import retrieve_topk
from .relations import (
    ExtractionResult,
    RelationTriple,
    format_triple_lines,
    load_template,
    relation_retrieve,
)

SELECTION_TEMPLATE = "citation_selection_v1"
RETRIEVER_KINDS = ("tfidf", "dense", "relation")
DEFAULT_ABSTRACT_BUDGET = 1200

_WORDISH = "A-Za-z0-9_"
_IDLIKE_RE = re.compile(rf"[{_WORDISH}][{_WORDISH}.\-]*")


@dataclass(frozen=True)
class RetrieverChoice:
    kind: str
    k: int = 20
    relation_scorer: str = "tfidf"

    def __post_init__(self) -> None:
        if self.kind not in RETRIEVER_KINDS:
            raise ValueError(f"unknown retriever kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.relation_scorer not in ("tfidf", "dense"):
            raise ValueError(f"unknown relation scorer {self.relation_scorer!r}")


@dataclass(frozen=True)
class Prediction:
    query_id: str
    predicted_ids: frozenset[str]
    retrieved_ids: tuple[str, ...]
    triples: ExtractionResult | None = None
    warnings: tuple[str, ...] = ()
    timings: dict | None = None


@dataclass(frozen=True)
class PredictionFailure:
    query_id: str
    error: str


@dataclass(frozen=True)
class CitedIds:
    ids: frozenset[str]
    warnings: tuple[str, ...] = ()


def _clip(text: str, budget: int) -> str:
    flat = " ".join(text.split())
    if len(flat) <= budget:
        return flat
    return flat[:budget].rstrip() + "..."


def build_citation_prompt(
    paragraph: str,
    candidates: Sequence[Document],
    *,
    single: bool = False,
    triples: Sequence[RelationTriple] = (),
    max_abstract_chars: int = DEFAULT_ABSTRACT_BUDGET,
) -> str:
    """Present the paragraph and the ranked candidates for final selection.

    Candidates appear in retrieval-rank order as ``[id] abstract`` lines,
    abstracts clipped to ``max_abstract_chars`` with a trailing ellipsis
    marker when cut.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    lines = [
        f"[{doc.id}] {_clip(doc.abstract, max_abstract_chars)}" for doc in candidates
    ]
    if triples:
        relations_block = (
            "\nRelations extracted from the paragraph:\n"
            + format_triple_lines(triples)
            + "\n"
        )
    else:
        relations_block = ""
    if single:
        instruction = "Choose exactly one id: the abstract this paragraph most likely cites."
    else:
        instruction = "Choose every abstract that this paragraph cites."
    return (
        load_template(SELECTION_TEMPLATE)
        .replace("{paragraph}", paragraph)
        .replace("{relations_block}", relations_block)
        .replace("{candidates_block}", "\n".join(lines))
        .replace("{choice_instruction}", instruction)
    )


def parse_cited_ids(raw: str, allowed_ids: Sequence[str]) -> CitedIds:
    """Pull candidate ids out of a free-form reply; total, never raises.

    Only members of ``allowed_ids`` survive. Ids are matched longest-first
    with word-ish boundary guards so ``c1`` never fires inside ``c12``.
    Leftover digit-bearing tokens are reported as likely hallucinated ids.
    When nothing matches, the first (top-ranked) allowed id is returned with
    a fallback warning, so the result is never empty.
    """
    ordered = list(dict.fromkeys(allowed_ids))
    if not ordered:
        raise ValueError("allowed_ids must be non-empty")
    found: set[str] = set()
    masked = raw
    for candidate in sorted(ordered, key=len, reverse=True):
        pattern = re.compile(
            rf"(?<![{_WORDISH}]){re.escape(candidate)}(?![{_WORDISH}])"
        )
        if pattern.search(masked):
            found.add(candidate)
            masked = pattern.sub(" ", masked)
    warnings: list[str] = []
    leftovers = sorted(
        {
            token
            for token in _IDLIKE_RE.findall(masked)
            if any(ch.isdigit() for ch in token)
        }
    )
    if leftovers:
        warnings.append(
            "ignored id-like tokens not in the candidate set: "
            + ", ".join(leftovers[:5])
        )
    if not found:
        top = ordered[0]
        warnings.append(
            f"no candidate id found in the response; falling back to top-ranked {top!r}"
        )
        found = {top}
    return CitedIds(ids=frozenset(found), warnings=tuple(warnings))


def predict(
    instance: QueryInstance,
    choice: RetrieverChoice,
    gateway: LlmGateway | None = None,
    embedder: EmbeddingProviderConfig | None = None,
    *,
    retrieval_only: bool = False,
    single: bool = False,
    triples_in_prompt: bool = False,
    max_abstract_chars: int = DEFAULT_ABSTRACT_BUDGET,
) -> Prediction:
    """Run the two-step pipeline (or retrieval only) for one query."""
    pool = instance.candidates
    extraction: ExtractionResult | None = None
    timings: dict[str, float] = {}
    started = time.perf_counter()
    if choice.kind == "tfidf":
        ranked = retrieve_topk(instance.paragraph, pool, choice.k)
    elif choice.kind == "dense":
        if embedder is None:
            raise ValueError("dense retrieval requires an embedding provider")
        store = build_store(pool, embedder)
        ranked = retrieve_topk_dense(instance.paragraph, store, embedder, choice.k)
    else:
        if gateway is None:
            raise ValueError("relation retrieval requires a gateway")
        if choice.relation_scorer == "dense" and embedder is None:
            raise ValueError("dense relation scoring requires an embedding provider")
        ranked, extraction = relation_retrieve(
            instance.paragraph,
            pool,
            choice.k,
            gateway,
            scorer=choice.relation_scorer,
            embedder=embedder,
        )
    timings["retrieval_s"] = time.perf_counter() - started
    retrieved_ids = ranked.ids
    warnings: tuple[str, ...] = ()
    if retrieval_only:
        predicted = frozenset(retrieved_ids)
    else:
        if gateway is None:
            raise ValueError("the full pipeline requires a gateway")
        docs_by_id = {doc.id: doc for doc in pool}
        prompt = build_citation_prompt(
            instance.paragraph,
            [docs_by_id[doc_id] for doc_id in retrieved_ids],
            single=single,
            triples=extraction.triples if (triples_in_prompt and extraction) else (),
            max_abstract_chars=max_abstract_chars,
        )
        selection_started = time.perf_counter()
        response = gateway.complete(ChatRequest(user_text=prompt))
        timings["selection_s"] = time.perf_counter() - selection_started
        parsed = parse_cited_ids(response.text, retrieved_ids)
        predicted = parsed.ids
        warnings = parsed.warnings
    return Prediction(
        query_id=instance.query_id,
        predicted_ids=predicted,
        retrieved_ids=retrieved_ids,
        triples=extraction,
        warnings=warnings,
        timings=timings,
    )


def run_predictions(
    dataset: Dataset,
    choice: RetrieverChoice,
    gateway: LlmGateway | None = None,
    embedder: EmbeddingProviderConfig | None = None,
    *,
    retrieval_only: bool = False,
    single: bool = False,
    triples_in_prompt: bool = False,
    max_abstract_chars: int = DEFAULT_ABSTRACT_BUDGET,
    parallel: int = 1,
) -> list[Prediction | PredictionFailure]:
    """Predict every instance, in dataset order, tolerating per-query failures.

    Transport failures mark the query failed and the run continues; the
    failure is visible to evaluation. Configuration errors still raise.
    """
    if parallel < 1:
        raise ValueError("parallel must be >= 1")

    def run_one(instance: QueryInstance) -> Prediction | PredictionFailure:
        try:
            return predict(
                instance,
                choice,
                gateway,
                embedder,
                retrieval_only=retrieval_only,
                single=single,
                triples_in_prompt=triples_in_prompt,
                max_abstract_chars=max_abstract_chars,
            )
        except (GatewayError, EmbeddingError) as exc:
            return PredictionFailure(query_id=instance.query_id, error=str(exc))

    if parallel == 1:
        return [run_one(instance) for instance in dataset]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(run_one, dataset.instances))
