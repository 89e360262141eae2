"""Greedy maximization of submodular objectives under a cardinality budget.

The shipped objective is the partition-diversity function

    f(S) = sum over clusters P_i of sqrt(sum of rewards of S intersect P_i)

which is monotone submodular for non-negative rewards: the square root damps
repeated picks from one cluster, so selections spread across clusters
(authors or venues). Greedy selection adds, at each step, the candidate with
the largest discrete derivative f(S + d) - f(S).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Corpus
from .errors import DataError

PARTITION_KEYS = ("authors", "venue")
BUDGET_SWEEP = (10, 20, 50, 100)


@dataclass(frozen=True)
class Partition:
    """Disjoint clusters covering the candidate set."""

    key: str
    clusters: tuple[frozenset[str], ...]

    def __post_init__(self) -> None:
        if len(self.clusters) < 1:
            raise DataError("a partition needs at least one cluster")
        seen: set[str] = set()
        for cluster in self.clusters:
            overlap = seen & cluster
            if overlap:
                raise DataError(f"partition clusters overlap on id {sorted(overlap)[0]!r}")
            seen.update(cluster)

    def members(self) -> frozenset[str]:
        return frozenset().union(*self.clusters)

    def cluster_of(self) -> dict[str, int]:
        """id -> cluster index lookup."""
        return {doc_id: i for i, cluster in enumerate(self.clusters) for doc_id in cluster}


def partition_candidates(corpus: Corpus, candidate_ids: Sequence[str], key: str) -> Partition:
    """Cluster candidates by first author or by venue.

    A document with several authors goes to its first author's cluster, which
    keeps clusters disjoint; documents with no author (or an empty venue)
    share one unlabeled cluster.
    """
    if key not in PARTITION_KEYS:
        raise DataError(f"unknown partition key {key!r} (expected one of {PARTITION_KEYS})")
    groups: dict[str, set[str]] = {}
    for doc_id in candidate_ids:
        doc = corpus.get(doc_id)
        if key == "authors":
            label = doc.authors[0] if doc.authors else ""
        else:
            label = doc.venue
        groups.setdefault(label, set()).add(doc_id)
    clusters = tuple(frozenset(groups[label]) for label in sorted(groups))
    return Partition(key=key, clusters=clusters)


@dataclass(frozen=True)
class SelectionProblem:
    """Candidate pool, budget and per-candidate non-negative rewards."""

    candidates: tuple[str, ...]
    budget: int
    rewards: Mapping[str, float]
    partition: Partition | None = None

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise DataError(f"budget must be >= 1, got {self.budget}")
        if len(set(self.candidates)) != len(self.candidates):
            raise DataError("duplicate candidate id")
        for doc_id in self.candidates:
            reward = self.rewards.get(doc_id)
            if reward is None:
                raise DataError(f"candidate {doc_id!r} has no reward")
            if math.isnan(reward):
                raise DataError(f"candidate {doc_id!r} has NaN reward")
            if reward < 0:
                raise DataError(f"candidate {doc_id!r} has negative reward {reward}")
        if self.partition is not None:
            missing = set(self.candidates) - self.partition.members()
            if missing:
                raise DataError(f"partition does not cover candidate {sorted(missing)[0]!r}")


@dataclass(frozen=True)
class RecommendationList:
    """Greedy selection trace: picked ids, per-step gains, final objective."""

    ids: tuple[str, ...]
    gains: tuple[float, ...]
    objective: float

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.gains):
            raise DataError("ids and gains must have equal length")

    def trace(self) -> list[dict]:
        """One record per step: {'step', 'picked', 'gain', 'objective'}."""
        running = 0.0
        records = []
        for step, (doc_id, gain) in enumerate(zip(self.ids, self.gains), start=1):
            running += gain
            records.append({"step": step, "picked": doc_id, "gain": gain, "objective": running})
        return records


def write_trace(result: RecommendationList, path: str | Path) -> None:
    """Export the selection trace as JSONL, one line per step."""
    Path(path).write_text(
        "".join(json.dumps(rec) + "\n" for rec in result.trace()),
        encoding="utf-8",
    )


def build_rewards(scores: Mapping[str, float]) -> dict[str, float]:
    """Clamp relevance scores to the non-negative rewards the objective needs."""
    rewards: dict[str, float] = {}
    for doc_id, score in scores.items():
        if math.isnan(score):
            raise DataError(f"NaN score for id {doc_id!r}")
        rewards[doc_id] = max(float(score), 0.0)
    return rewards


def qai_objective(problem: SelectionProblem, selected: Iterable[str]) -> float:
    """From-scratch evaluation of the partition-diversity objective on a set.

    Kept deliberately simple (one pass per call) so it can serve as the
    oracle against the incremental evaluator inside greedy_select.
    """
    if problem.partition is None:
        raise DataError("the partition-diversity objective requires a partition")
    selected = set(selected)
    unknown = selected - set(problem.candidates)
    if unknown:
        raise DataError(f"id {sorted(unknown)[0]!r} is not a candidate")
    cluster_of = problem.partition.cluster_of()
    sums = [0.0] * len(problem.partition.clusters)
    for doc_id in selected:
        sums[cluster_of[doc_id]] += problem.rewards[doc_id]
    return sum(math.sqrt(s) for s in sums)


def greedy_select(problem: SelectionProblem,
                  objective: Callable[[set[str]], float] | None = None) -> RecommendationList:
    """Greedy maximization under the cardinality budget.

    At each of up to `budget` steps the candidate with the largest discrete
    derivative is added; ties break by ascending id. Selection stops early
    when the best gain is <= 0 (harmless for the monotone shipped objective,
    safe for non-monotone ones).

    With objective=None the partition-diversity objective is used through an
    incremental per-cluster evaluator, making each gain O(1). Any other
    set function is evaluated from scratch at every probe.
    """
    if not problem.candidates:
        raise DataError("cannot select from an empty candidate set")
    if objective is None:
        return _greedy_qai(problem)
    return _greedy_generic(problem, objective)


def _greedy_qai(problem: SelectionProblem) -> RecommendationList:
    if problem.partition is None:
        raise DataError("the partition-diversity objective requires a partition")
    cluster_of = problem.partition.cluster_of()
    cluster_sums = [0.0] * len(problem.partition.clusters)
    remaining = sorted(problem.candidates)
    picked: list[str] = []
    gains: list[float] = []
    objective_value = 0.0
    while remaining and len(picked) < problem.budget:
        best_gain = -math.inf
        best_idx = -1
        for idx, doc_id in enumerate(remaining):
            s = cluster_sums[cluster_of[doc_id]]
            gain = math.sqrt(s + problem.rewards[doc_id]) - math.sqrt(s)
            if gain > best_gain:  # ties keep the earlier (smaller) id
                best_gain = gain
                best_idx = idx
        if best_gain <= 0.0:
            break
        doc_id = remaining.pop(best_idx)
        cluster_sums[cluster_of[doc_id]] += problem.rewards[doc_id]
        objective_value += best_gain
        picked.append(doc_id)
        gains.append(best_gain)
    return RecommendationList(tuple(picked), tuple(gains), objective_value)


def _greedy_generic(problem: SelectionProblem,
                    objective: Callable[[set[str]], float]) -> RecommendationList:
    remaining = sorted(problem.candidates)
    picked: list[str] = []
    gains: list[float] = []
    current = objective(set())
    while remaining and len(picked) < problem.budget:
        best_gain = -math.inf
        best_idx = -1
        for idx, doc_id in enumerate(remaining):
            gain = objective(set(picked) | {doc_id}) - current
            if gain > best_gain:
                best_gain = gain
                best_idx = idx
        if best_gain <= 0.0:
            break
        picked.append(remaining.pop(best_idx))
        gains.append(best_gain)
        current += best_gain
    return RecommendationList(tuple(picked), tuple(gains), current)


@dataclass(frozen=True)
class SubmodularityReport:
    """Outcome of sampling the diminishing-returns inequality."""

    trials: int
    violations: tuple[dict, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def check_submodular(objective: Callable[[set[str]], float], candidates: Sequence[str],
                     trials: int, seed: int, tolerance: float = 1e-9) -> SubmodularityReport:
    """Sample random (A subset of B, d not in B) configurations and test
    f(B + d) - f(B) <= f(A + d) - f(A) + tolerance.

    Meant for small candidate sets (<= 15); each violation is recorded with
    the witnessing sets and both marginal gains.
    """
    candidates = list(candidates)
    if len(candidates) > 15:
        raise DataError(f"check_submodular is limited to 15 candidates, got {len(candidates)}")
    if not candidates:
        raise DataError("cannot check submodularity over an empty candidate set")
    rng = random.Random(seed)
    violations: list[dict] = []
    performed = 0
    while performed < trials:
        b = {c for c in candidates if rng.random() < 0.5}
        outside = [c for c in candidates if c not in b]
        if not outside:
            continue
        a = {c for c in b if rng.random() < 0.5}
        d = rng.choice(outside)
        performed += 1
        gain_b = objective(b | {d}) - objective(b)
        gain_a = objective(a | {d}) - objective(a)
        if gain_b > gain_a + tolerance:
            violations.append({
                "A": sorted(a), "B": sorted(b), "d": d,
                "gain_at_B": gain_b, "gain_at_A": gain_a,
            })
    return SubmodularityReport(trials=performed, violations=tuple(violations))
