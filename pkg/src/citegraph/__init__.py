"""Citation recommendation engine.

Scores candidate documents against a query lexically (TF-IDF, BM25) or by
embedding cosine similarity, mines training pairs from the citation graph,
selects recommendation lists by greedy submodular maximization, and
evaluates runs with MRR and F1@k.
"""

from .corpus import Corpus, Document, SplitSpec, load_corpus, query_text, split_by_year
from .embeddings import EmbeddingMatrix, cosine, knn, load_embeddings, save_embeddings
from .errors import CitegraphError, DataError, FormatError
from .evaluation import EvalResult, evaluate, f1_at_k, reciprocal_rank
from .graph import CitationGraph, build_graph, distance_level, positives
from .lexical import (
    Bm25Params,
    InvertedIndex,
    Tokenizer,
    bm25_score,
    build_index,
    load_index,
    rank_lexical,
    save_index,
    tfidf_score,
)
from .pairs import generate_pairs, generate_triplets, triplet_loss
from .pipeline import PipelineConfig, recommend, recommend_batch
from .submodular import (
    BUDGET_SWEEP,
    Partition,
    RecommendationList,
    SelectionProblem,
    build_rewards,
    check_submodular,
    greedy_select,
    qai_objective,
)

__version__ = "0.1.0"

__all__ = [
    "BUDGET_SWEEP",
    "Bm25Params",
    "CitationGraph",
    "CitegraphError",
    "Corpus",
    "DataError",
    "Document",
    "EmbeddingMatrix",
    "EvalResult",
    "FormatError",
    "InvertedIndex",
    "Partition",
    "PipelineConfig",
    "RecommendationList",
    "SelectionProblem",
    "SplitSpec",
    "Tokenizer",
    "bm25_score",
    "build_graph",
    "build_index",
    "build_rewards",
    "check_submodular",
    "cosine",
    "distance_level",
    "evaluate",
    "f1_at_k",
    "generate_pairs",
    "generate_triplets",
    "greedy_select",
    "knn",
    "load_corpus",
    "load_embeddings",
    "load_index",
    "positives",
    "qai_objective",
    "query_text",
    "rank_lexical",
    "reciprocal_rank",
    "recommend",
    "recommend_batch",
    "save_embeddings",
    "save_index",
    "split_by_year",
    "tfidf_score",
    "triplet_loss",
]
