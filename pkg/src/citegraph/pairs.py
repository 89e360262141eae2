"""Training-pair generation from the citation graph.

For each query document the generator emits every positive within the chosen
citation distance, plus exactly as many negatives as positives, drawn from
the non-positive documents by one of three strategies:

  random    uniform without replacement under a seed
  nearest   smallest cosine distance to the query (hard negatives)
  farthest  largest cosine distance to the query

When fewer non-positives exist than positives, all of them are taken and the
shortfall is reported per query.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from itertools import cycle, islice
from pathlib import Path
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import DataError, FormatError
from .graph import CitationGraph, PositiveExample, positives

logger = logging.getLogger(__name__)

STRATEGIES = ("random", "nearest", "farthest")


@dataclass(frozen=True)
class SiamesePair:
    query_id: str
    other_id: str
    target_sim: float
    label: str  # "pos" or "neg"


@dataclass(frozen=True)
class Triplet:
    anchor_id: str
    positive_id: str
    negative_id: str


@dataclass(frozen=True)
class PairBatch:
    pairs: tuple[SiamesePair, ...]
    shortfalls: dict[str, int]  # query id -> missing negative count


@dataclass(frozen=True)
class TripletBatch:
    triplets: tuple[Triplet, ...]
    shortfalls: dict[str, int]


def triplet_loss(s_pos: float, s_neg: float) -> float:
    """Hinge penalty max(s_neg - s_pos + 1, 0) on a unit similarity margin."""
    return max(s_neg - s_pos + 1.0, 0.0)


def _query_rng(seed: int, query_id: str) -> random.Random:
    # Seeding with a string keeps per-query draws independent of query order
    # and reproducible across processes (no hash randomization involved).
    return random.Random(f"{seed}:{query_id}")


def _select_negatives(query_id: str, candidates: list[str], count: int,
                      strategy: str, seed: int,
                      emb: EmbeddingMatrix | None) -> list[str]:
    """Pick `count` negatives from sorted non-positive candidates."""
    if count == 0 or not candidates:
        return []
    if strategy == "random":
        return _query_rng(seed, query_id).sample(candidates, min(count, len(candidates)))
    assert emb is not None
    query = emb.vector(query_id).astype(np.float64)
    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        raise DataError(f"cosine undefined for zero query vector (id {query_id!r})")
    rows = np.stack([emb.vector(c) for c in candidates]).astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    if zero.any():
        raise DataError(f"cosine undefined for zero vector (id {candidates[int(np.argmax(zero))]!r})")
    sims = rows @ query / (norms * qnorm)
    if strategy == "nearest":
        order = sorted(range(len(candidates)), key=lambda i: (-sims[i], candidates[i]))
    else:  # farthest
        order = sorted(range(len(candidates)), key=lambda i: (sims[i], candidates[i]))
    return [candidates[i] for i in order[:count]]


def _validate_generation_args(strategy: str, emb: EmbeddingMatrix | None) -> None:
    if strategy not in STRATEGIES:
        raise DataError(f"unknown negative strategy {strategy!r} (expected one of {STRATEGIES})")
    if strategy in ("nearest", "farthest") and emb is None:
        raise DataError(f"strategy {strategy!r} requires an embedding matrix")


def _per_query_examples(graph: CitationGraph, emb: EmbeddingMatrix | None,
                        query_id: str, max_d: int, theta: float, strategy: str,
                        seed: int) -> tuple[list[PositiveExample], list[str], int]:
    """Positives, selected negatives and the shortfall for one query."""
    pos = positives(graph, query_id, max_d, theta)
    positive_ids = {p.positive_id for p in pos}
    pool = sorted(set(graph.nodes) - positive_ids - {query_id})
    negatives = _select_negatives(query_id, pool, len(pos), strategy, seed, emb)
    shortfall = len(pos) - len(negatives)
    if shortfall:
        logger.info("query %r: only %d non-positive document(s) for %d positive(s)",
                    query_id, len(negatives), len(pos))
    return pos, negatives, shortfall


def generate_pairs(graph: CitationGraph, emb: EmbeddingMatrix | None,
                   query_ids: Sequence[str], max_d: int, theta: float,
                   strategy: str, seed: int) -> PairBatch:
    """Siamese pairs for every query: positives at distance <= max_d with
    target theta**(d-1), balanced by strategy-selected negatives at target 0.

    Output is sorted by (query_id, label, other_id) for diff-stable files.
    """
    _validate_generation_args(strategy, emb)
    pairs: list[SiamesePair] = []
    shortfalls: dict[str, int] = {}
    for query_id in query_ids:
        pos, negatives, shortfall = _per_query_examples(
            graph, emb, query_id, max_d, theta, strategy, seed)
        if shortfall:
            shortfalls[query_id] = shortfall
        pairs.extend(SiamesePair(query_id, p.positive_id, p.target_sim, "pos") for p in pos)
        pairs.extend(SiamesePair(query_id, n, 0.0, "neg") for n in negatives)
    pairs.sort(key=lambda p: (p.query_id, p.label, p.other_id))
    return PairBatch(tuple(pairs), shortfalls)


def generate_triplets(graph: CitationGraph, emb: EmbeddingMatrix | None,
                      query_ids: Sequence[str], max_d: int, strategy: str,
                      seed: int, theta: float = 0.4,
                      cross_product: bool = False) -> TripletBatch:
    """One triplet per positive, each matched with one strategy-selected
    negative (negatives repeat only when the pool runs short). With
    cross_product=True every (positive, negative) combination is emitted.

    Output is sorted by (anchor, positive, negative).
    """
    _validate_generation_args(strategy, emb)
    triplets: list[Triplet] = []
    shortfalls: dict[str, int] = {}
    for query_id in query_ids:
        pos, negatives, shortfall = _per_query_examples(
            graph, emb, query_id, max_d, theta, strategy, seed)
        if shortfall:
            shortfalls[query_id] = shortfall
        if not negatives:
            continue
        if cross_product:
            triplets.extend(Triplet(query_id, p.positive_id, n)
                            for p in pos for n in negatives)
        else:
            triplets.extend(Triplet(query_id, p.positive_id, n)
                            for p, n in zip(pos, islice(cycle(negatives), len(pos))))
    triplets.sort(key=lambda t: (t.anchor_id, t.positive_id, t.negative_id))
    return TripletBatch(tuple(triplets), shortfalls)


# --- JSONL persistence -------------------------------------------------------
#
# First line is a header {"seed", "strategy", "max_d", "theta"}; each further
# line is one pair {"q", "d", "sim", "label"} or triplet {"q", "pos", "neg"}.


def _header(seed: int, strategy: str, max_d: int, theta: float) -> str:
    return json.dumps({"seed": seed, "strategy": strategy, "max_d": max_d, "theta": theta})


def write_pairs(batch: PairBatch, path: str | Path, *, seed: int, strategy: str,
                max_d: int, theta: float) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_header(seed, strategy, max_d, theta) + "\n")
        for p in batch.pairs:
            fh.write(json.dumps({"q": p.query_id, "d": p.other_id,
                                 "sim": p.target_sim, "label": p.label}) + "\n")


def write_triplets(batch: TripletBatch, path: str | Path, *, seed: int, strategy: str,
                   max_d: int, theta: float) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_header(seed, strategy, max_d, theta) + "\n")
        for t in batch.triplets:
            fh.write(json.dumps({"q": t.anchor_id, "pos": t.positive_id,
                                 "neg": t.negative_id}) + "\n")


def _read_lines(path: Path) -> tuple[dict, list[dict]]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read pair file {path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{line_no}: malformed JSON: {exc.msg}") from exc
    if not records:
        raise FormatError(f"{path}: missing header line")
    header, rows = records[0], records[1:]
    for key in ("seed", "strategy", "max_d"):
        if key not in header:
            raise FormatError(f"{path}: header is missing {key!r}")
    return header, rows


def read_pairs(path: str | Path) -> tuple[dict, list[SiamesePair]]:
    """Load a pair file; returns (header, pairs)."""
    path = Path(path)
    header, rows = _read_lines(path)
    pairs = []
    for row in rows:
        try:
            pairs.append(SiamesePair(row["q"], row["d"], float(row["sim"]), row["label"]))
        except KeyError as exc:
            raise FormatError(f"{path}: pair record is missing {exc.args[0]!r}") from exc
    return header, pairs


def read_triplets(path: str | Path) -> tuple[dict, list[Triplet]]:
    """Load a triplet file; returns (header, triplets)."""
    path = Path(path)
    header, rows = _read_lines(path)
    triplets = []
    for row in rows:
        try:
            triplets.append(Triplet(row["q"], row["pos"], row["neg"]))
        except KeyError as exc:
            raise FormatError(f"{path}: triplet record is missing {exc.args[0]!r}") from exc
    return header, triplets
