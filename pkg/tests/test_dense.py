from __future__ import annotations

import json
import zlib

import httpx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from citeseek.corpus import Document
from citeseek.dense import (
    EmbeddingError,
    EmbeddingProviderConfig,
    EmbeddingVector,
    build_store,
    embed,
    retrieve_topk_dense,
)

from oracle import brute_hash_embedding, brute_rank_dense

MOCK8 = EmbeddingProviderConfig(kind="mock", dim=8)
MOCK64 = EmbeddingProviderConfig(kind="mock", dim=64)


def test_mock_embedding_matches_stated_hashing_scheme():
    [vector] = embed(["a a b"], MOCK8)
    expected = [0.0] * 8
    expected[zlib.crc32(b"a", 0) % 8] = 2.0
    expected[zlib.crc32(b"b", 0) % 8] = 1.0
    norm = (2.0**2 + 1.0**2) ** 0.5
    expected = [value / norm for value in expected]
    assert list(vector.values) == pytest.approx(expected, abs=1e-12)


def test_mock_embedding_matches_independent_rederivation():
    texts = ["dense retrieval of abstracts", "graph models", "a a b c"]
    vectors = embed(texts, MOCK64)
    for text, vector in zip(texts, vectors):
        assert list(vector.values) == pytest.approx(
            brute_hash_embedding(text, 64), abs=1e-12
        )


def test_identical_texts_embed_identically_in_order():
    vectors = embed(["same text", "other", "same text"], MOCK64)
    assert vectors[0] == vectors[2]
    assert vectors[0] != vectors[1]


def test_empty_text_yields_zero_vector_with_warning(caplog):
    with caplog.at_level("WARNING"):
        [vector] = embed([""], MOCK8)
    assert vector.is_zero()
    assert any("zero vector" in message for message in caplog.messages)


def test_embed_rejects_empty_input_list():
    with pytest.raises(ValueError):
        embed([], MOCK8)


def test_remote_config_requires_endpoint_and_model():
    with pytest.raises(ValueError):
        EmbeddingProviderConfig(kind="remote")


@given(st.lists(st.floats(0.1, 100.0), min_size=3, max_size=8), st.floats(0.01, 1000.0))
def test_normalization_is_scale_invariant(raw, c):
    unit = EmbeddingVector.normalized(raw)
    scaled = EmbeddingVector.normalized([c * v for v in raw])
    assert np.allclose(unit.values, scaled.values, atol=1e-9)


def test_embedding_vector_rejects_non_unit_norm():
    with pytest.raises(ValueError):
        EmbeddingVector(values=(0.5, 0.5))


def test_build_store_uniform_dim(tiny_pool):
    store = build_store(tiny_pool, MOCK64)
    assert len(store) == 5
    assert store.matrix.shape == (5, 64)


def test_store_is_deterministic(tiny_pool):
    first = build_store(tiny_pool, MOCK64)
    second = build_store(tiny_pool, MOCK64)
    assert first.ids == second.ids
    assert np.array_equal(first.matrix, second.matrix)


def test_title_contributes_to_document_embedding():
    plain = Document(id="d", abstract="shared words")
    titled = Document(id="d", abstract="shared words", title="unique title")
    [v_plain] = embed([plain.text()], MOCK64)
    [v_titled] = embed([titled.text()], MOCK64)
    assert v_plain != v_titled


def test_self_retrieval_ranks_self_first(tiny_pool):
    store = build_store(tiny_pool, MOCK64)
    for doc in tiny_pool:
        ranked = retrieve_topk_dense(doc.text(), store, MOCK64, 1)
        assert ranked.entries[0][0] == doc.id
        assert ranked.entries[0][1] == pytest.approx(1.0, abs=1e-9)


def test_k_covers_pool(tiny_pool):
    store = build_store(tiny_pool, MOCK64)
    assert len(retrieve_topk_dense("anything", store, MOCK64, 99)) == 5


def test_dense_ranking_matches_bruteforce_oracle():
    texts = [
        "citation networks evolve",
        "retrieval with embeddings",
        "embeddings of citation text",
        "noise documents here",
        "more retrieval tricks",
        "networks and graphs",
    ]
    pool = [Document(id=f"d{i}", abstract=t) for i, t in enumerate(texts)]
    store = build_store(pool, MOCK64)
    ranked = retrieve_topk_dense("citation embeddings retrieval", store, MOCK64, 6)
    expected = brute_rank_dense(
        "citation embeddings retrieval", [d.id for d in pool], texts, 64, 6
    )
    assert ranked.ids == tuple(doc_id for doc_id, _ in expected)
    for (_, got), (_, want) in zip(ranked.entries, expected):
        assert got == pytest.approx(want, abs=1e-9)


def test_topk_lists_are_nested(tiny_pool):
    store = build_store(tiny_pool, MOCK64)
    previous: tuple[str, ...] = ()
    for k in range(1, 6):
        ids = retrieve_topk_dense("sparse retrieval of citations", store, MOCK64, k).ids
        assert ids[: len(previous)] == previous
        previous = ids


REMOTE = EmbeddingProviderConfig(
    kind="remote",
    endpoint="http://embeddings.test/v1/embeddings",
    model_name="embedder-1",
    dim=4,
    backoff_base=0.0,
)


def _embedding_response(request: httpx.Request) -> httpx.Response:
    payload = json.loads(request.content)
    data = []
    for index, text in enumerate(payload["input"]):
        seed = float(len(text) + 1)
        data.append({"index": index, "embedding": [seed, 0.0, 1.0, 0.0]})
    return httpx.Response(200, json={"data": data})


def test_remote_embedding_normalized_on_receipt():
    transport = httpx.MockTransport(_embedding_response)
    [vector] = embed(["abc"], REMOTE, transport=transport)
    assert np.linalg.norm(vector.values) == pytest.approx(1.0, abs=1e-9)


def test_remote_wire_format_and_batch_order():
    seen: list[dict] = []

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        seen.append(body)
        # Deliberately scrambled response order; index must restore it.
        data = [
            {"index": i, "embedding": [float(i + 1), 1.0, 0.0, 0.0]}
            for i in reversed(range(len(body["input"])))
        ]
        return httpx.Response(200, json={"data": data})

    vectors = embed(["one", "two", "three"], REMOTE, transport=httpx.MockTransport(handler))
    assert seen[0]["model"] == "embedder-1"
    assert seen[0]["input"] == ["one", "two", "three"]
    assert vectors[0].values[0] < vectors[2].values[0]


def test_remote_wrong_count_names_expected_and_actual():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"data": [{"index": 0, "embedding": [1.0, 0, 0, 0]}]})

    with pytest.raises(EmbeddingError, match="expected 2, got 1"):
        embed(["a", "b"], REMOTE, transport=httpx.MockTransport(handler))


def test_remote_dimension_mismatch_is_an_error():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"data": [{"index": 0, "embedding": [1.0, 2.0]}]})

    with pytest.raises(EmbeddingError, match="dimension"):
        embed(["a"], REMOTE, transport=httpx.MockTransport(handler))


def test_remote_retries_then_succeeds():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(500, text="boom")
        return httpx.Response(200, json={"data": [{"index": 0, "embedding": [1.0, 0, 0, 0]}]})

    [vector] = embed(["a"], REMOTE, transport=httpx.MockTransport(handler))
    assert calls["n"] == 3
    assert vector.values[0] == pytest.approx(1.0)


def test_remote_transport_failure_after_retries():
    def handler(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("refused")

    with pytest.raises(EmbeddingError, match="after 3 attempts"):
        embed(["a"], REMOTE, transport=httpx.MockTransport(handler))


def test_remote_multi_batch_results_keep_input_order():
    import time

    provider = EmbeddingProviderConfig(
        kind="remote",
        endpoint="http://embeddings.test/v1/embeddings",
        model_name="embedder-1",
        dim=4,
        batch_size=2,
        max_in_flight=3,
        backoff_base=0.0,
    )

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        # Later batches answer faster, so completion order is scrambled.
        time.sleep(0.03 / (1 + len(body["input"][0])))
        data = [
            {"index": i, "embedding": [float(text.count("x")), 1.0, 0.0, 0.0]}
            for i, text in enumerate(body["input"])
        ]
        return httpx.Response(200, json={"data": data})

    texts = ["x" * n for n in range(1, 6)]
    vectors = embed(texts, provider, transport=httpx.MockTransport(handler))
    lead = [v.values[0] for v in vectors]
    assert lead == sorted(lead)  # x-counts 1..5 come back in input order
