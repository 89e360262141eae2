"""MRR and F1@k over ranked recommendation runs.

MRR averages, over queries, the reciprocal rank of the first correct
citation. F1@k is the harmonic mean of the corpus-level precision and recall
at k: per-query precision and recall are computed first, averaged over the
query set, and the harmonic mean is taken once on the averages. Precision
always divides by k, so a system that returns fewer than k items is
penalized rather than excused.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DataError, FormatError

logger = logging.getLogger(__name__)

DEFAULT_KS = (10, 20, 50, 100)


def reciprocal_rank(predicted: Sequence[str], truth: set[str] | frozenset[str]) -> float:
    """1/rank of the first predicted id found in truth; 0 on a total miss."""
    if not truth:
        raise DataError("reciprocal rank is undefined for an empty truth set")
    for rank, doc_id in enumerate(predicted, start=1):
        if doc_id in truth:
            return 1.0 / rank
    return 0.0


def f1_at_k(predicted: Sequence[str], truth: set[str] | frozenset[str],
            k: int) -> tuple[float, float, float]:
    """(precision, recall, f1) over the top-k predictions.

    Precision divides by k even when fewer than k items were returned.
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if not truth:
        raise DataError("precision/recall are undefined for an empty truth set")
    hits = len(set(predicted[:k]) & truth)
    precision = hits / k
    recall = hits / len(truth)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class QueryResult:
    reciprocal_rank: float
    precision_at_k: dict[int, float]
    recall_at_k: dict[int, float]


@dataclass(frozen=True)
class EvalResult:
    mrr: float
    f1_at_k: dict[int, float]
    precision_at_k: dict[int, float]
    recall_at_k: dict[int, float]
    per_query: dict[str, QueryResult]
    num_queries: int
    num_excluded: int

    def to_json(self) -> dict:
        """The machine-readable result shape used by the CLI."""
        return {
            "mrr": self.mrr,
            "f1": {str(k): v for k, v in sorted(self.f1_at_k.items())},
            "num_queries": self.num_queries,
            "num_excluded": self.num_excluded,
        }


def evaluate(run: Mapping[str, Sequence[str]], truth: Mapping[str, set[str] | frozenset[str]],
             ks: Sequence[int] = DEFAULT_KS, per_query_f1: bool = False) -> EvalResult:
    """Score a run (query id -> ranked predictions) against ground truth.

    Every run query must have a truth entry; queries whose truth set is empty
    are excluded with a count. Aggregation order is canonical (sorted query
    ids), so the result is invariant to the run's iteration order. With
    per_query_f1=True the F1 is instead computed per query and averaged
    (sensitivity-analysis mode, not the default contract).
    """
    ks = sorted(set(ks))
    if not ks:
        raise DataError("at least one k is required")
    if any(k < 1 for k in ks):
        raise DataError("every k must be >= 1")
    missing = sorted(set(run) - set(truth))
    if missing:
        raise DataError(f"run query {missing[0]!r} has no truth entry")

    per_query: dict[str, QueryResult] = {}
    excluded = 0
    for query_id in sorted(run):
        truth_set = truth[query_id]
        if not truth_set:
            excluded += 1
            continue
        predicted = run[query_id]
        prf = {k: f1_at_k(predicted, truth_set, k) for k in ks}
        per_query[query_id] = QueryResult(
            reciprocal_rank=reciprocal_rank(predicted, truth_set),
            precision_at_k={k: prf[k][0] for k in ks},
            recall_at_k={k: prf[k][1] for k in ks},
        )
    if excluded:
        logger.info("evaluate: excluded %d query(ies) with empty truth", excluded)

    n = len(per_query)
    if n == 0:
        zeros = {k: 0.0 for k in ks}
        return EvalResult(0.0, dict(zeros), dict(zeros), dict(zeros), {}, 0, excluded)

    ordered = [per_query[q] for q in sorted(per_query)]
    mrr = sum(r.reciprocal_rank for r in ordered) / n
    mean_p = {k: sum(r.precision_at_k[k] for r in ordered) / n for k in ks}
    mean_r = {k: sum(r.recall_at_k[k] for r in ordered) / n for k in ks}
    if per_query_f1:
        f1 = {
            k: sum(_harmonic(r.precision_at_k[k], r.recall_at_k[k]) for r in ordered) / n
            for k in ks
        }
    else:
        f1 = {k: _harmonic(mean_p[k], mean_r[k]) for k in ks}
    return EvalResult(mrr, f1, mean_p, mean_r, per_query, n, excluded)


def _harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


# --- run files ----------------------------------------------------------------


def write_run(run: Mapping[str, Sequence[str]], path: str | Path) -> None:
    """Write a run as JSONL lines {"q": id, "ranked": [id, ...]}, sorted by query."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for query_id in sorted(run):
            fh.write(json.dumps({"q": query_id, "ranked": list(run[query_id])}) + "\n")


def read_run(path: str | Path) -> dict[str, list[str]]:
    """Load a JSONL run file into {query id: ranked predictions}."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read run file {path}: {exc}") from exc
    run: dict[str, list[str]] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{line_no}: malformed JSON: {exc.msg}") from exc
        if not isinstance(record, dict) or "q" not in record or "ranked" not in record:
            raise FormatError(f"{path}:{line_no}: run record needs 'q' and 'ranked'")
        if record["q"] in run:
            raise FormatError(f"{path}:{line_no}: duplicate query {record['q']!r}")
        run[record["q"]] = list(record["ranked"])
    return run
