"""End-to-end recommendation: score candidates, then select a list.

Four configurations fall out of two axes: the scorer (tfidf, bm25, or cosine
over precomputed embeddings) and the selector (plain top-k ranking, or greedy
maximization of the partition-diversity objective with the clamped scores as
rewards). The query document itself is never a candidate.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .corpus import Corpus, Document, query_text
from .embeddings import EmbeddingMatrix, knn
from .errors import DataError
from .lexical import Bm25Params, InvertedIndex, rank_lexical
from .submodular import (
    Partition,
    RecommendationList,
    SelectionProblem,
    build_rewards,
    greedy_select,
    partition_candidates,
)

logger = logging.getLogger(__name__)

SCORERS = ("tfidf", "bm25", "cosine")
SELECTORS = ("topk", "qai")

# Applied when prefilter="auto": embedding scoring bounds the greedy pool,
# lexical scoring runs over the full corpus.
DEFAULT_COSINE_PREFILTER = 1000


@dataclass(frozen=True)
class PipelineConfig:
    scorer: str = "bm25"
    selector: str = "topk"
    k: int = 10
    partition_key: str = "authors"
    prefilter: int | str | None = "auto"
    bm25: Bm25Params = Bm25Params()

    def __post_init__(self) -> None:
        if self.scorer not in SCORERS:
            raise DataError(f"unknown scorer {self.scorer!r} (expected one of {SCORERS})")
        if self.selector not in SELECTORS:
            raise DataError(f"unknown selector {self.selector!r} (expected one of {SELECTORS})")
        if self.k < 1:
            raise DataError(f"k must be >= 1, got {self.k}")
        if isinstance(self.prefilter, str) and self.prefilter != "auto":
            raise DataError(f"prefilter must be an integer, None or 'auto', got {self.prefilter!r}")
        if isinstance(self.prefilter, int) and self.prefilter < self.k:
            raise DataError(f"prefilter {self.prefilter} must be >= k {self.k}")

    def effective_prefilter(self) -> int | None:
        if self.prefilter == "auto":
            return DEFAULT_COSINE_PREFILTER if self.scorer == "cosine" else None
        return self.prefilter

    def to_json(self) -> dict:
        return {
            "scorer": self.scorer,
            "selector": self.selector,
            "k": self.k,
            "partition_key": self.partition_key if self.selector == "qai" else None,
            "prefilter": self.effective_prefilter(),
        }


def _score_candidates(config: PipelineConfig, corpus: Corpus, index: InvertedIndex | None,
                      emb: EmbeddingMatrix | None, query: Document | str,
                      limit: int) -> list[tuple[str, float]]:
    """Ranked (id, score) pairs for up to `limit` candidates, query excluded."""
    query_id = query.id if isinstance(query, Document) else None
    if config.scorer in ("tfidf", "bm25"):
        if index is None:
            raise DataError(f"scorer {config.scorer!r} requires an inverted index")
        text = query_text(query) if isinstance(query, Document) else query
        if not index.tokenizer.tokenize(text):
            raise DataError("query is empty after tokenization")
        exclude = {query_id} if query_id is not None else set()
        return rank_lexical(index, text, config.scorer, limit, config.bm25, exclude)

    if emb is None:
        raise DataError("scorer 'cosine' requires an embedding matrix")
    if not isinstance(query, Document):
        raise DataError("missing embedding for an embedding-scorer query: "
                        "raw text must be embedded offline and passed as a document")
    if query.id not in emb:
        raise DataError(f"missing embedding for an embedding-scorer query (id {query.id!r})")
    candidate_set = {doc_id for doc_id in corpus.ids() if doc_id in emb}
    uncovered = len(corpus) - len(candidate_set)
    if uncovered:
        logger.warning("%d corpus document(s) have no embedding and cannot be candidates", uncovered)
    exclude = (set(emb.ids) - candidate_set) | {query.id}
    return knn(emb, emb.vector(query.id), limit, exclude=exclude)


def recommend(config: PipelineConfig, corpus: Corpus, index: InvertedIndex | None,
              emb: EmbeddingMatrix | None, query: Document | str) -> RecommendationList:
    """Recommend up to k documents from the corpus for the query.

    The top-k selector returns the k highest-scoring candidates in rank
    order. The submodular selector clamps the scores into rewards, partitions
    the (optionally prefiltered) pool, and runs greedy selection; if greedy
    exhausts all positive gains early, the remaining budget is filled with
    zero-gain candidates in ascending id order, exactly as an unstopped
    greedy would.
    """
    pool_size = len(corpus)
    if config.selector == "topk":
        ranked = _score_candidates(config, corpus, index, emb, query, config.k)
        if not ranked:
            raise DataError("empty candidate pool")
        ids = tuple(doc_id for doc_id, _ in ranked)
        scores = tuple(score for _, score in ranked)
        return RecommendationList(ids, scores, sum(scores))

    limit = config.effective_prefilter() or pool_size
    ranked = _score_candidates(config, corpus, index, emb, query, limit)
    if not ranked:
        raise DataError("empty candidate pool")
    scores = dict(ranked)
    rewards = build_rewards(scores)
    candidates = tuple(sorted(scores))
    partition = partition_candidates(corpus, candidates, config.partition_key)
    problem = SelectionProblem(candidates=candidates, budget=config.k,
                               rewards=rewards, partition=partition)
    result = greedy_select(problem)
    if len(result.ids) < min(config.k, len(candidates)):
        result = _fill_budget(result, candidates, config.k)
    return result


def _fill_budget(result: RecommendationList, candidates: Sequence[str],
                 k: int) -> RecommendationList:
    """Continue greedy past the early stop: remaining gains are all zero, so
    picks proceed by the ascending-id tie-break with gain 0."""
    chosen = set(result.ids)
    ids = list(result.ids)
    gains = list(result.gains)
    for doc_id in sorted(candidates):
        if len(ids) >= k:
            break
        if doc_id not in chosen:
            ids.append(doc_id)
            gains.append(0.0)
    return RecommendationList(tuple(ids), tuple(gains), result.objective)


def recommend_batch(config: PipelineConfig, corpus: Corpus, index: InvertedIndex | None,
                    emb: EmbeddingMatrix | None, queries: Sequence[Document],
                    jobs: int = 1) -> dict[str, list[str]]:
    """Run recommend over many queries; output is keyed and ordered by query id.

    With jobs > 1 the queries fan out over a thread pool; all inputs are
    immutable, and the canonical ordering keeps the output identical to a
    sequential run.
    """
    def one(doc: Document) -> tuple[str, list[str]]:
        return doc.id, list(recommend(config, corpus, index, emb, doc).ids)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(one, queries))
    else:
        results = dict(one(doc) for doc in queries)
    return {query_id: results[query_id] for query_id in sorted(results)}
