"""Citation discovery: retrieve candidate abstracts, then select the cited ones.

Retrieval comes in three flavours (TF-IDF, dense embeddings, and LLM-extracted
relation triples); an optional second LLM pass picks the final cited ids from
the retrieved subset. The evaluation harness scores prediction runs with
set-based precision/recall/F1.
"""

from .corpus import (
    Dataset,
    DatasetError,
    Document,
    QueryInstance,
    ValidationIssue,
    load_dataset,
    validate_dataset_file,
    validate_instance,
    write_dataset,
)
from .dense import (
    EmbeddingError,
    EmbeddingProviderConfig,
    EmbeddingVector,
    VectorStore,
    build_store,
    embed,
    retrieve_topk_dense,
)
from .evaluation import (
    EvalReport,
    PerQueryCounts,
    aggregate,
    counts_for_run,
    evaluate_run,
    f1,
    render_report,
    score_query,
)
from .gateway import (
    ChatRequest,
    ChatResponse,
    GatewayConfig,
    GatewayError,
    LlmGateway,
    MockScriptEntry,
    MockScriptError,
    TransportFailure,
)
from .lexical import SparseVector, TfIdfIndex, build_index, cosine, retrieve_topk, vectorize
from .predictor import (
    Prediction,
    PredictionFailure,
    RetrieverChoice,
    build_citation_prompt,
    parse_cited_ids,
    predict,
    run_predictions,
)
from .ranking import RankedList, rank_top_k
from .relations import (
    ExtractionResult,
    RelationTriple,
    build_extraction_prompt,
    parse_triples,
    relation_retrieve,
    render_relation_query,
)
from .textproc import Vocabulary, build_vocabulary, tokenize

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DatasetError",
    "Document",
    "QueryInstance",
    "ValidationIssue",
    "load_dataset",
    "validate_dataset_file",
    "validate_instance",
    "write_dataset",
    "EmbeddingError",
    "EmbeddingProviderConfig",
    "EmbeddingVector",
    "VectorStore",
    "build_store",
    "embed",
    "retrieve_topk_dense",
    "EvalReport",
    "PerQueryCounts",
    "aggregate",
    "counts_for_run",
    "evaluate_run",
    "f1",
    "render_report",
    "score_query",
    "ChatRequest",
    "ChatResponse",
    "GatewayConfig",
    "GatewayError",
    "LlmGateway",
    "MockScriptEntry",
    "MockScriptError",
    "TransportFailure",
    "SparseVector",
    "TfIdfIndex",
    "build_index",
    "cosine",
    "retrieve_topk",
    "vectorize",
    "Prediction",
    "PredictionFailure",
    "RetrieverChoice",
    "build_citation_prompt",
    "parse_cited_ids",
    "predict",
    "run_predictions",
    "RankedList",
    "rank_top_k",
    "ExtractionResult",
    "RelationTriple",
    "build_extraction_prompt",
    "parse_triples",
    "relation_retrieve",
    "render_relation_query",
    "Vocabulary",
    "build_vocabulary",
    "tokenize",
]
