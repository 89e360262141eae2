import math
import random

import pytest

from citegraph.corpus import query_text
from citegraph.errors import DataError, FormatError
from citegraph.lexical import (
    Bm25Params,
    Tokenizer,
    bm25_score,
    build_index,
    load_index,
    rank_lexical,
    save_index,
    tfidf_score,
)

from conftest import text_corpus


# Test-local naive scorers: rescan raw token lists, no inverted index involved.

def naive_tfidf(doc_tokens, query_tokens, pos):
    n = len(doc_tokens)
    score = 0.0
    for term in set(query_tokens):
        tf = doc_tokens[pos].count(term)
        if tf:
            df = sum(1 for tokens in doc_tokens if term in tokens)
            score += math.sqrt(tf / len(doc_tokens[pos])) * math.log(n / (df + 1))
    return score


def naive_bm25(doc_tokens, query_tokens, pos, k=1.2, b=0.75):
    n = len(doc_tokens)
    avgdl = sum(len(t) for t in doc_tokens) / n
    score = 0.0
    for term in set(query_tokens):
        tf = doc_tokens[pos].count(term)
        if tf:
            df = sum(1 for tokens in doc_tokens if term in tokens)
            score += (tf * (k + 1) / (tf + k * (1 - b + b * len(doc_tokens[pos]) / avgdl))
                      * math.log((n - df + 0.5) / (df + 0.5)))
    return score


def random_text_corpus(rng, max_docs=100, vocab=30):
    words = [f"w{i}" for i in range(rng.randint(2, vocab))]
    texts = [" ".join(rng.choice(words) for _ in range(rng.randint(1, 12)))
             for _ in range(rng.randint(2, max_docs))]
    return text_corpus(texts), words


class TestTokenizer:
    def test_lowercases_and_splits_alphanumeric_runs(self):
        assert Tokenizer().tokenize("Foo-bar BAZ42, qux!") == ["foo", "bar", "baz42", "qux"]

    def test_empty_text(self):
        assert Tokenizer().tokenize("") == []

    def test_underscore_is_a_separator(self):
        assert Tokenizer().tokenize("a_b") == ["a", "b"]

    def test_lowercase_off(self):
        assert Tokenizer(lowercase=False).tokenize("Foo foo") == ["Foo", "foo"]


class TestBuildIndex:
    def test_hand_counts(self):
        index = build_index(text_corpus(["a b", "a c"]))
        assert index.doc_freq("a") == 2
        assert index.doc_freq("b") == 1
        assert index.avg_doc_length == 2

    def test_empty_document(self):
        index = build_index(text_corpus([""]))
        assert index.doc_lengths == [0]
        assert index.num_terms == 0

    def test_rebuild_is_identical(self, three_doc_corpus):
        a = build_index(three_doc_corpus)
        b = build_index(three_doc_corpus)
        assert a.ids == b.ids
        assert a.doc_lengths == b.doc_lengths
        assert sorted(a.terms()) == sorted(b.terms())
        assert all(a.postings(t) == b.postings(t) for t in a.terms())

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError, match="empty"):
            build_index(text_corpus([]))

    def test_index_invariants(self):
        rng = random.Random(7)
        corpus, _ = random_text_corpus(rng, max_docs=30)
        index = build_index(corpus)
        tokenizer = index.tokenizer
        for term in index.terms():
            assert index.doc_freq(term) == len(index.postings(term))
        for pos, doc in enumerate(corpus):
            total_tf = sum(index.term_freq(t, pos) for t in index.terms())
            assert total_tf == len(tokenizer.tokenize(query_text(doc)))
        assert index.avg_doc_length == sum(index.doc_lengths) / len(index.doc_lengths)


class TestHandWorkedScores:
    """Three-document fixture ['a b', 'a c', 'a d'], natural log."""

    def test_tfidf_rare_term(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        expected = math.sqrt(1 / 2) * math.log(3 / 2)
        assert tfidf_score(index, "b", "d000") == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.28671, abs=5e-6)

    def test_tfidf_ubiquitous_term_goes_negative(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        expected = math.sqrt(1 / 2) * math.log(3 / 4)
        assert tfidf_score(index, "a", "d000") == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(-0.20342, abs=5e-6)

    def test_tfidf_no_match_is_zero(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        assert tfidf_score(index, "z", "d000") == 0.0

    def test_bm25_ubiquitous_term(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        # A = 2.2/2.2 = 1; B = ln(0.5/3.5) = -ln 7
        assert bm25_score(index, "a", "d000") == pytest.approx(-math.log(7), abs=1e-12)
        assert -math.log(7) == pytest.approx(-1.94591, abs=5e-6)

    def test_bm25_rare_term(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        # A = 2.2/2.2 = 1; B = ln((3-1+0.5)/(1+0.5)) = ln(5/3)
        assert bm25_score(index, "b", "d000") == pytest.approx(math.log(5 / 3), abs=1e-12)
        assert math.log(5 / 3) == pytest.approx(0.51083, abs=5e-6)

    def test_bm25_no_match_is_zero(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        assert bm25_score(index, "z", "d001") == 0.0

    def test_unknown_doc_id(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        with pytest.raises(DataError, match="nope"):
            tfidf_score(index, "a", "nope")
        with pytest.raises(DataError, match="nope"):
            bm25_score(index, "a", "nope")

    def test_repeated_query_terms_do_not_multiply(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        assert bm25_score(index, "b b b", "d000") == bm25_score(index, "b", "d000")
        assert tfidf_score(index, "b b b", "d000") == tfidf_score(index, "b", "d000")


class TestScoreOracle:
    def test_matches_naive_rescan_on_random_corpora(self):
        rng = random.Random(42)
        tokenizer = Tokenizer()
        for _ in range(10):
            corpus, words = random_text_corpus(rng)
            index = build_index(corpus, tokenizer)
            doc_tokens = [tokenizer.tokenize(query_text(d)) for d in corpus]
            for _ in range(10):
                query = " ".join(rng.choice(words) for _ in range(rng.randint(1, 4)))
                q_tokens = tokenizer.tokenize(query)
                pos = rng.randrange(len(corpus))
                doc_id = corpus.documents[pos].id
                assert tfidf_score(index, query, doc_id) == pytest.approx(
                    naive_tfidf(doc_tokens, q_tokens, pos), abs=1e-9)
                assert bm25_score(index, query, doc_id) == pytest.approx(
                    naive_bm25(doc_tokens, q_tokens, pos), abs=1e-9)

    def test_b_zero_removes_length_effect(self):
        short = build_index(text_corpus(["a b", "c c", "d d"]))
        padded = build_index(text_corpus(["a b x x x x", "c c", "d d"]))
        params = Bm25Params(b=0.0)
        assert (bm25_score(short, "a", "d000", params)
                == bm25_score(padded, "a", "d000", params))

    def test_tf_saturation_is_monotone(self):
        # Fixed positive IDF; growing TF in the scored document.
        params = Bm25Params()
        previous = -math.inf
        for tf in range(1, 8):
            corpus = text_corpus([" ".join(["a"] * tf), "b b", "c c"])
            index = build_index(corpus)
            score = bm25_score(index, "a", "d000", params)
            assert score >= previous - 1e-12
            previous = score

    def test_doc_freq_untouched_by_unrelated_documents(self):
        base = build_index(text_corpus(["a b", "a c"]))
        grown = build_index(text_corpus(["a b", "a c", "x y"]))
        assert base.doc_freq("a") == grown.doc_freq("a") == 2
        assert grown.num_docs == base.num_docs + 1


class TestRankLexical:
    def test_singleton_best_match(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        assert rank_lexical(index, "b", "bm25", 1)[0][0] == "d000"

    def test_ties_break_by_ascending_id(self):
        index = build_index(text_corpus(["same text", "same text", "other thing"]))
        ranked = rank_lexical(index, "same", "bm25", 2)
        assert [doc_id for doc_id, _ in ranked] == ["d000", "d001"]

    def test_matches_score_all_then_sort_oracle(self):
        rng = random.Random(3)
        corpus, words = random_text_corpus(rng, max_docs=20)
        index = build_index(corpus)
        tokenizer = index.tokenizer
        doc_tokens = [tokenizer.tokenize(query_text(d)) for d in corpus]
        for scorer, naive in (("tfidf", naive_tfidf), ("bm25", naive_bm25)):
            for _ in range(5):
                query = " ".join(rng.choice(words) for _ in range(rng.randint(1, 3)))
                q_tokens = set(tokenizer.tokenize(query))
                expected = []
                for pos, doc in enumerate(corpus):
                    matched = bool(q_tokens & set(doc_tokens[pos]))
                    score = naive(doc_tokens, list(q_tokens), pos) if matched else 0.0
                    expected.append((0 if matched else 1, -score, doc.id))
                expected.sort()
                want = [doc_id for _, _, doc_id in expected]
                got = [doc_id for doc_id, _ in rank_lexical(index, query, scorer, len(corpus))]
                assert got == want

    def test_unmatched_documents_never_ahead_of_matched(self):
        # 'a' appears in 3 of 4 docs, so its BM25 IDF is negative: matching
        # docs score below the unmatched doc's 0, yet still rank ahead of it.
        corpus = text_corpus(["a a", "a b", "a c", "z"])
        index = build_index(corpus)
        ranked = rank_lexical(index, "a", "bm25", 4)
        assert ranked[-1][0] == "d003"
        assert all(score < 0 for doc_id, score in ranked[:-1])

    def test_k_must_be_positive(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        with pytest.raises(DataError):
            rank_lexical(index, "a", "bm25", 0)

    def test_exclude(self, three_doc_corpus):
        index = build_index(three_doc_corpus)
        ranked = rank_lexical(index, "b", "bm25", 3, exclude={"d000"})
        assert "d000" not in [doc_id for doc_id, _ in ranked]


class TestIndexPersistence:
    def test_round_trip_preserves_scores_and_bytes(self, tmp_path):
        rng = random.Random(11)
        corpus, words = random_text_corpus(rng, max_docs=40)
        index = build_index(corpus)
        path = tmp_path / "index.cgix"
        save_index(index, path)
        first_bytes = path.read_bytes()
        assert first_bytes.startswith(b"CGIX1")

        loaded = load_index(path)
        assert loaded.ids == index.ids
        assert loaded.doc_lengths == index.doc_lengths
        assert loaded.tokenizer == index.tokenizer
        query = " ".join(words[:3])
        for doc in corpus:
            assert bm25_score(loaded, query, doc.id) == bm25_score(index, query, doc.id)

        again = tmp_path / "again.cgix"
        save_index(loaded, again)
        assert again.read_bytes() == first_bytes

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.cgix"
        path.write_bytes(b"NOPE!rest")
        with pytest.raises(FormatError, match="magic"):
            load_index(path)

    def test_truncated_file(self, tmp_path, three_doc_corpus):
        path = tmp_path / "trunc.cgix"
        save_index(build_index(three_doc_corpus), path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(FormatError, match="truncated|trailing"):
            load_index(path)
