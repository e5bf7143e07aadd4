from __future__ import annotations

import json
import random

import pytest

from citeseek.corpus import Dataset, Document, QueryInstance
from citeseek.gateway import GatewayConfig, LlmGateway, MockScriptEntry


def make_pool(texts: dict[str, str]) -> list[Document]:
    return [Document(id=doc_id, abstract=text) for doc_id, text in texts.items()]


def make_instance(
    query_id: str,
    paragraph: str,
    pool: dict[str, str],
    gold: set[str],
) -> QueryInstance:
    return QueryInstance(
        query_id=query_id,
        paragraph=paragraph,
        candidates=tuple(make_pool(pool)),
        gold_ids=frozenset(gold),
    )


def planted_dataset(
    n_instances: int = 100,
    pool_size: int = 8,
    seed: int = 0,
    sig_len: int = 5,
) -> Dataset:
    """Synthetic queries whose gold document shares a unique term signature.

    Query qN's paragraph and its gold candidate qNc0 both contain the five
    tokens sigNt0..sigNt4, which appear nowhere else; distractors get their
    own junk vocabulary plus one corpus-wide shared token.
    """
    rng = random.Random(seed)
    instances = []
    for q in range(n_instances):
        signature = [f"sig{q}t{j}" for j in range(sig_len)]
        paragraph = " ".join(signature * 2 + ["shared", f"filler{rng.randrange(1000)}"])
        candidates = []
        gold_id = f"q{q}c0"
        candidates.append(
            Document(
                id=gold_id,
                abstract=" ".join(signature + ["shared", f"junk{q}g{rng.randrange(100)}"]),
            )
        )
        for d in range(1, pool_size):
            words = [f"junk{q}d{d}w{j}" for j in range(6)] + ["shared"]
            candidates.append(Document(id=f"q{q}c{d}", abstract=" ".join(words)))
        instances.append(
            QueryInstance(
                query_id=f"q{q}",
                paragraph=paragraph,
                candidates=tuple(candidates),
                gold_ids=frozenset({gold_id}),
            )
        )
    return Dataset(instances=tuple(instances))


def pipeline_script(dataset: Dataset) -> list[MockScriptEntry]:
    """One extraction and one selection entry per query, content-keyed.

    Extraction prompts are recognized by their fixed heading plus the
    query's unique signature token; selection prompts by the bracketed gold
    candidate id, which only ever appears in the candidates block.
    """
    entries = []
    for instance in dataset:
        q = instance.query_id
        sig = f"sig{q[1:]}t0"
        gold_id = sorted(instance.gold_ids)[0]
        entries.append(
            MockScriptEntry(
                match=rf"(?s)Extract the key factual relations.*{sig}\b",
                regex=True,
                response=(
                    f"{sig} sig{q[1:]}t1 | relates to | sig{q[1:]}t2 sig{q[1:]}t3"
                ),
            )
        )
        entries.append(MockScriptEntry(match=f"[{gold_id}]", response=gold_id))
    return entries


def mock_gateway(entries, **config_overrides) -> LlmGateway:
    config = GatewayConfig(kind="mock", script=tuple(entries), **config_overrides)
    return LlmGateway(config)


@pytest.fixture
def tiny_pool() -> list[Document]:
    return make_pool(
        {
            "c1": "graph neural networks for molecules",
            "c2": "dense passage retrieval with bi-encoders",
            "c3": "citation prediction from paragraphs",
            "c4": "probabilistic ranking of documents",
            "c5": "keyword importance in sparse retrieval",
        }
    )


def write_dataset_file(dataset: Dataset, path) -> str:
    records = []
    for instance in dataset:
        records.append(
            json.dumps(
                {
                    "query_id": instance.query_id,
                    "paragraph": instance.paragraph,
                    "candidates": [
                        {"id": d.id, "abstract": d.abstract}
                        | ({"title": d.title} if d.title else {})
                        for d in instance.candidates
                    ],
                    "gold": sorted(instance.gold_ids),
                },
                sort_keys=True,
            )
        )
    path.write_text("\n".join(records) + "\n", encoding="utf-8")
    return str(path)
