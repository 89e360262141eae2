"""Directed citation graph, distance levels and positive-example mining.

An edge i -> j means document i cites document j. The distance level between
two documents is the hop count of the shortest directed path, so a direct
citation has distance 1 and a citation-of-a-citation has distance 2.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

from .corpus import Corpus
from .errors import DataError

logger = logging.getLogger(__name__)


def target_similarity(theta: float, distance: int) -> float:
    """Regression target theta**(distance-1) for a positive pair.

    Computed in decimal arithmetic on theta's shortest decimal form so that
    published constants stay exact: theta=0.4 gives 1.0, 0.4, 0.16 for
    distances 1, 2, 3 (binary float powers would drift by one ulp).
    """
    if distance < 1:
        raise DataError(f"distance must be >= 1, got {distance}")
    return float(Decimal(str(theta)) ** (distance - 1))


@dataclass(frozen=True)
class PositiveExample:
    """A training positive: a document within citation distance 1..3 of a query."""

    query_id: str
    positive_id: str
    distance: int
    target_sim: float


class CitationGraph:
    """Immutable directed graph over document ids with sorted adjacency."""

    def __init__(self, nodes: list[str], edges: list[tuple[str, str]]):
        self.nodes: tuple[str, ...] = tuple(nodes)
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise DataError("duplicate node id in citation graph")
        successors: dict[str, set[str]] = {node: set() for node in self.nodes}
        predecessors: dict[str, set[str]] = {node: set() for node in self.nodes}
        for src, dst in edges:
            if src not in node_set or dst not in node_set:
                raise DataError(f"edge ({src!r}, {dst!r}) names an unknown node")
            if src == dst:
                raise DataError(f"self-loop on node {src!r}")
            successors[src].add(dst)
            predecessors[dst].add(src)
        self._succ: dict[str, tuple[str, ...]] = {n: tuple(sorted(s)) for n, s in successors.items()}
        self._pred: dict[str, tuple[str, ...]] = {n: tuple(sorted(p)) for n, p in predecessors.items()}
        self.num_edges: int = sum(len(s) for s in self._succ.values())
        # Set by build_graph: references that pointed outside the corpus.
        self.num_skipped_references: int = 0

    def __contains__(self, node: str) -> bool:
        return node in self._succ

    def successors(self, node: str) -> tuple[str, ...]:
        try:
            return self._succ[node]
        except KeyError:
            raise DataError(f"unknown node {node!r} in citation graph") from None

    def predecessors(self, node: str) -> tuple[str, ...]:
        try:
            return self._pred[node]
        except KeyError:
            raise DataError(f"unknown node {node!r} in citation graph") from None

    def neighbors(self, node: str, undirected: bool = False) -> tuple[str, ...]:
        if not undirected:
            return self.successors(node)
        return tuple(sorted(set(self.successors(node)) | set(self.predecessors(node))))

    def edge_list(self) -> list[tuple[str, str]]:
        """All edges as (from, to) pairs, sorted."""
        return sorted((src, dst) for src in self.nodes for dst in self._succ[src])


def build_graph(corpus: Corpus) -> CitationGraph:
    """One node per document, one edge per resolvable reference.

    Dangling references are skipped; their count is logged, and the total is
    available afterwards as len(corpus.dangling_references) occurrences.
    """
    nodes = corpus.ids()
    edges: list[tuple[str, str]] = []
    skipped = 0
    for doc in corpus:
        for ref in doc.references:
            if ref in corpus:
                edges.append((doc.id, ref))
            else:
                skipped += 1
    if skipped:
        logger.info("citation graph: skipped %d dangling reference(s)", skipped)
    graph = CitationGraph(nodes, edges)
    graph.num_skipped_references = skipped
    return graph


def write_edge_list(graph: CitationGraph, path: str | Path) -> None:
    """Export 'from_id<TAB>to_id' lines, sorted."""
    Path(path).write_text(
        "".join(f"{src}\t{dst}\n" for src, dst in graph.edge_list()),
        encoding="utf-8",
    )


def _bfs_levels(graph: CitationGraph, start: str, max_d: int,
                undirected: bool) -> dict[str, int]:
    """Minimum hop counts from start to every node within max_d hops.

    The frontier expands in sorted-id order so traversal is deterministic.
    Includes the start node at distance 0.
    """
    dist: dict[str, int] = {start: 0}
    frontier = deque([start])
    while frontier:
        node = frontier.popleft()
        d = dist[node]
        if d == max_d:
            continue
        for succ in graph.neighbors(node, undirected=undirected):
            if succ not in dist:
                dist[succ] = d + 1
                frontier.append(succ)
    return dist


def distance_level(graph: CitationGraph, from_id: str, to_id: str, max_d: int,
                   undirected: bool = False) -> int | None:
    """Directed shortest-path hop count if <= max_d, else None.

    Returns 0 for from_id == to_id; callers mining examples exclude that case.
    """
    if max_d < 1:
        raise DataError(f"max_d must be >= 1, got {max_d}")
    if from_id not in graph:
        raise DataError(f"unknown node {from_id!r} in citation graph")
    if to_id not in graph:
        raise DataError(f"unknown node {to_id!r} in citation graph")
    return _bfs_levels(graph, from_id, max_d, undirected).get(to_id)


def positives(graph: CitationGraph, query_id: str, max_d: int, theta: float,
              undirected: bool = False) -> list[PositiveExample]:
    """Positive examples: every node at directed distance 1..max_d from the query.

    Each node appears once, at its minimum distance, with target similarity
    theta**(distance-1). Results are sorted by (distance, id).
    """
    if max_d not in (1, 2, 3):
        raise DataError(f"max_d must be one of 1, 2, 3, got {max_d}")
    if not (0.0 < theta < 1.0):
        raise DataError(f"theta must lie in (0, 1), got {theta}")
    if query_id not in graph:
        raise DataError(f"unknown node {query_id!r} in citation graph")
    levels = _bfs_levels(graph, query_id, max_d, undirected)
    examples = [
        PositiveExample(query_id, node, d, target_similarity(theta, d))
        for node, d in levels.items()
        if node != query_id
    ]
    examples.sort(key=lambda ex: (ex.distance, ex.positive_id))
    return examples
