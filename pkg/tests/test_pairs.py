import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citegraph.corpus import Corpus
from citegraph.embeddings import EmbeddingMatrix, cosine
from citegraph.errors import DataError
from citegraph.graph import CitationGraph, build_graph, positives
from citegraph.pairs import (
    generate_pairs,
    generate_triplets,
    read_pairs,
    read_triplets,
    triplet_loss,
    write_pairs,
    write_triplets,
)

from conftest import make_doc


def star_corpus(n=10, fanout=3):
    """q cites the first `fanout` of n other docs; no deeper structure."""
    others = [make_doc(f"d{i:02d}") for i in range(n)]
    q = make_doc("q", references=tuple(f"d{i:02d}" for i in range(fanout)))
    return Corpus([q] + others)


def random_embeddings(ids, dim=6, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddingMatrix(list(ids), rng.normal(size=(len(ids), dim)).astype(np.float32))


class TestGeneratePairs:
    def test_negatives_balance_positives(self):
        corpus = star_corpus(n=10, fanout=3)
        graph = build_graph(corpus)
        batch = generate_pairs(graph, None, ["q"], max_d=1, theta=0.4,
                               strategy="random", seed=7)
        pos = [p for p in batch.pairs if p.label == "pos"]
        neg = [p for p in batch.pairs if p.label == "neg"]
        assert len(pos) == len(neg) == 3
        assert not batch.shortfalls

    def test_positive_targets_follow_distance(self, chain_corpus):
        graph = build_graph(chain_corpus)
        batch = generate_pairs(graph, None, ["A"], max_d=3, theta=0.4,
                               strategy="random", seed=1)
        targets = {p.other_id: p.target_sim for p in batch.pairs if p.label == "pos"}
        assert targets == {"B": 1.0, "C": 0.4, "D": 0.16}
        assert all(p.target_sim == 0.0 for p in batch.pairs if p.label == "neg")

    def test_shortfall_reported_when_pool_exhausted(self):
        # Every other document is a positive: no negatives exist.
        corpus = Corpus([make_doc("q", references=("a", "b")), make_doc("a"), make_doc("b")])
        graph = build_graph(corpus)
        batch = generate_pairs(graph, None, ["q"], max_d=1, theta=0.4,
                               strategy="random", seed=3)
        assert [p for p in batch.pairs if p.label == "neg"] == []
        assert batch.shortfalls == {"q": 2}

    def test_no_self_and_no_duplicates(self):
        corpus = star_corpus(n=12, fanout=4)
        graph = build_graph(corpus)
        batch = generate_pairs(graph, None, ["q"], max_d=2, theta=0.4,
                               strategy="random", seed=5)
        combos = [(p.query_id, p.other_id) for p in batch.pairs]
        assert len(set(combos)) == len(combos)
        assert all(q != other for q, other in combos)

    def test_same_seed_is_deterministic(self):
        corpus = star_corpus(n=20, fanout=5)
        graph = build_graph(corpus)
        kwargs = dict(max_d=1, theta=0.4, strategy="random", seed=11)
        a = generate_pairs(graph, None, ["q"], **kwargs)
        b = generate_pairs(graph, None, ["q"], **kwargs)
        assert a == b

    def test_different_seeds_differ(self):
        corpus = star_corpus(n=30, fanout=5)
        graph = build_graph(corpus)
        a = generate_pairs(graph, None, ["q"], 1, 0.4, "random", seed=1)
        b = generate_pairs(graph, None, ["q"], 1, 0.4, "random", seed=2)
        assert a != b  # 25 choose 5 draws collide with negligible probability

    def test_canonical_output_ordering(self):
        corpus = star_corpus(n=8, fanout=2)
        graph = build_graph(corpus)
        batch = generate_pairs(graph, None, ["q", "d00"], max_d=1, theta=0.4,
                               strategy="random", seed=2)
        keys = [(p.query_id, p.label, p.other_id) for p in batch.pairs]
        assert keys == sorted(keys)

    def test_embedding_strategies_require_embeddings(self):
        graph = CitationGraph(["a", "b"], [("a", "b")])
        for strategy in ("nearest", "farthest"):
            with pytest.raises(DataError, match="embedding"):
                generate_pairs(graph, None, ["a"], 1, 0.4, strategy, seed=0)

    def test_unknown_query(self):
        graph = CitationGraph(["a"], [])
        with pytest.raises(DataError, match="nope"):
            generate_pairs(graph, None, ["nope"], 1, 0.4, "random", seed=0)


class TestEmbeddingStrategies:
    def make_fixture(self, seed=13):
        corpus = star_corpus(n=10, fanout=3)
        graph = build_graph(corpus)
        emb = random_embeddings(corpus.ids(), seed=seed)
        return graph, emb

    def exhaustive_selection(self, graph, emb, query, n, reverse):
        pos = {p.positive_id for p in positives(graph, query, 2, 0.4)}
        pool = sorted(set(graph.nodes) - pos - {query})
        scored = sorted(((cosine(emb, query, c), c) for c in pool),
                        key=lambda e: (-e[0] if reverse else e[0], e[1]))
        return {c for _, c in scored[:n]}

    @pytest.mark.parametrize("strategy,reverse", [("nearest", True), ("farthest", False)])
    def test_matches_exhaustive_scan(self, strategy, reverse):
        graph, emb = self.make_fixture()
        batch = generate_pairs(graph, emb, ["q"], max_d=2, theta=0.4,
                               strategy=strategy, seed=0)
        got = {p.other_id for p in batch.pairs if p.label == "neg"}
        n_pos = sum(1 for p in batch.pairs if p.label == "pos")
        assert got == self.exhaustive_selection(graph, emb, "q", n_pos, reverse)

    def test_nearest_and_farthest_disjoint_on_large_pool(self):
        # Pool of 9 non-positives against 3 requested: disjoint extremes.
        graph, emb = self.make_fixture(seed=77)
        near = generate_pairs(graph, emb, ["q"], 1, 0.4, "nearest", seed=0)
        far = generate_pairs(graph, emb, ["q"], 1, 0.4, "farthest", seed=0)
        near_ids = {p.other_id for p in near.pairs if p.label == "neg"}
        far_ids = {p.other_id for p in far.pairs if p.label == "neg"}
        assert near_ids and far_ids
        assert not (near_ids & far_ids)


class TestGenerateTriplets:
    def test_one_triplet_per_positive_distinct_negatives(self):
        corpus = star_corpus(n=10, fanout=2)
        graph = build_graph(corpus)
        batch = generate_triplets(graph, None, ["q"], max_d=1, strategy="random", seed=9)
        assert len(batch.triplets) == 2
        negs = {t.negative_id for t in batch.triplets}
        assert len(negs) == 2
        for t in batch.triplets:
            assert len({t.anchor_id, t.positive_id, t.negative_id}) == 3

    def test_no_positives_no_triplets(self):
        corpus = Corpus([make_doc("q"), make_doc("a")])
        graph = build_graph(corpus)
        batch = generate_triplets(graph, None, ["q"], max_d=1, strategy="random", seed=0)
        assert batch.triplets == ()

    def test_negatives_cycle_under_shortfall(self):
        # 2 positives but only 1 non-positive: both triplets share it.
        corpus = Corpus([make_doc("q", references=("a", "b")),
                         make_doc("a"), make_doc("b"), make_doc("c")])
        graph = build_graph(corpus)
        batch = generate_triplets(graph, None, ["q"], max_d=1, strategy="random", seed=0)
        assert len(batch.triplets) == 2
        assert {t.negative_id for t in batch.triplets} == {"c"}
        assert batch.shortfalls == {"q": 1}

    def test_cross_product_mode(self):
        corpus = star_corpus(n=10, fanout=3)
        graph = build_graph(corpus)
        batch = generate_triplets(graph, None, ["q"], max_d=1, strategy="random",
                                  seed=4, cross_product=True)
        assert len(batch.triplets) == 9  # 3 positives x 3 negatives

    def test_same_seed_identical(self):
        corpus = star_corpus(n=15, fanout=4)
        graph = build_graph(corpus)
        a = generate_triplets(graph, None, ["q"], 1, "random", seed=2)
        b = generate_triplets(graph, None, ["q"], 1, "random", seed=2)
        assert a == b


class TestTripletLoss:
    def test_margin_exactly_met(self):
        assert triplet_loss(1.2, 0.2) == 0.0

    def test_partial_margin(self):
        assert triplet_loss(0.9, 0.2) == pytest.approx(0.3, abs=1e-12)

    def test_equal_similarities_cost_full_margin(self):
        assert triplet_loss(0.5, 0.5) == 1.0

    @given(st.floats(-1, 1), st.floats(-1, 1))
    @settings(max_examples=100, deadline=None)
    def test_non_negative_and_zero_iff_margin_met(self, s_pos, s_neg):
        loss = triplet_loss(s_pos, s_neg)
        assert loss >= 0.0
        if s_pos >= s_neg + 1:
            assert loss == 0.0
        else:
            assert loss > 0.0


class TestFileFormats:
    def test_pair_file_round_trip_and_header(self, tmp_path):
        corpus = star_corpus(n=8, fanout=2)
        graph = build_graph(corpus)
        batch = generate_pairs(graph, None, ["q"], 1, 0.4, "random", seed=42)
        path = tmp_path / "pairs.jsonl"
        write_pairs(batch, path, seed=42, strategy="random", max_d=1, theta=0.4)

        first_line = path.read_text().splitlines()[0]
        assert json.loads(first_line) == {"seed": 42, "strategy": "random",
                                          "max_d": 1, "theta": 0.4}
        header, pairs = read_pairs(path)
        assert header["seed"] == 42
        assert tuple(pairs) == batch.pairs

    def test_triplet_file_round_trip(self, tmp_path):
        corpus = star_corpus(n=8, fanout=2)
        graph = build_graph(corpus)
        batch = generate_triplets(graph, None, ["q"], 1, "random", seed=3)
        path = tmp_path / "triplets.jsonl"
        write_triplets(batch, path, seed=3, strategy="random", max_d=1, theta=0.4)
        header, triplets = read_triplets(path)
        assert tuple(triplets) == batch.triplets
        assert header["strategy"] == "random"

    def test_rerun_writes_byte_identical_file(self, tmp_path):
        corpus = star_corpus(n=12, fanout=3)
        graph = build_graph(corpus)
        emb = random_embeddings(corpus.ids(), seed=1)
        paths = []
        for name in ("a.jsonl", "b.jsonl"):
            batch = generate_pairs(graph, emb, ["q"], 2, 0.4, "farthest", seed=7)
            path = tmp_path / name
            write_pairs(batch, path, seed=7, strategy="farthest", max_d=2, theta=0.4)
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]


class TestPerQueryProperty:
    def test_negative_count_rule_across_random_graphs(self):
        rng = random.Random(17)
        for trial in range(10):
            n = rng.randint(4, 25)
            ids = [f"n{i:02d}" for i in range(n)]
            docs = []
            for i, doc_id in enumerate(ids):
                refs = tuple(other for other in ids[i + 1:] if rng.random() < 0.3)
                docs.append(make_doc(doc_id, references=refs))
            corpus = Corpus(docs)
            graph = build_graph(corpus)
            batch = generate_pairs(graph, None, ids, max_d=2, theta=0.4,
                                   strategy="random", seed=trial)
            by_query: dict[str, dict[str, int]] = {}
            for p in batch.pairs:
                by_query.setdefault(p.query_id, {"pos": 0, "neg": 0})[p.label] += 1
            for query_id, counts in by_query.items():
                available = n - 1 - counts["pos"]
                assert counts["neg"] == min(counts["pos"], available)
                shortfall = counts["pos"] - counts["neg"]
                assert batch.shortfalls.get(query_id, 0) == shortfall
