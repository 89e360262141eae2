"""Naive reference implementations and the self-check suite.

The scorers here rescan raw token lists instead of touching the inverted
index, so they can vouch for the indexed fast paths. The CLI `check` command
runs these cross-checks plus the submodularity sampler and reports any
disagreement.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .corpus import Corpus, Document, query_text
from .lexical import Bm25Params, Tokenizer, bm25_score, build_index, tfidf_score
from .submodular import Partition, SelectionProblem, check_submodular, qai_objective


def naive_tfidf(doc_tokens: list[list[str]], query_terms: list[str], doc_pos: int) -> float:
    """TF-IDF by direct rescan of the raw token lists."""
    num_docs = len(doc_tokens)
    doc = doc_tokens[doc_pos]
    score = 0.0
    for term in sorted(set(query_terms)):
        tf = doc.count(term)
        if tf == 0:
            continue
        df = sum(1 for tokens in doc_tokens if term in tokens)
        score += math.sqrt(tf / len(doc)) * math.log(num_docs / (df + 1))
    return score


def naive_bm25(doc_tokens: list[list[str]], query_terms: list[str], doc_pos: int,
               params: Bm25Params = Bm25Params()) -> float:
    """BM25 by direct rescan of the raw token lists."""
    num_docs = len(doc_tokens)
    avgdl = sum(len(tokens) for tokens in doc_tokens) / num_docs
    doc = doc_tokens[doc_pos]
    k, b = params.k, params.b
    score = 0.0
    for term in sorted(set(query_terms)):
        tf = doc.count(term)
        if tf == 0:
            continue
        df = sum(1 for tokens in doc_tokens if term in tokens)
        tf_part = tf * (k + 1) / (tf + k * (1 - b + b * len(doc) / avgdl))
        score += tf_part * math.log((num_docs - df + 0.5) / (df + 0.5))
    return score


def random_corpus(rng: random.Random, max_docs: int = 100, vocab_size: int = 30) -> Corpus:
    """A synthetic corpus of random-token documents for oracle checks."""
    vocab = [f"w{i}" for i in range(rng.randint(2, vocab_size))]
    docs = []
    for i in range(rng.randint(2, max_docs)):
        length = rng.randint(1, 12)
        tokens = [rng.choice(vocab) for _ in range(length)]
        docs.append(Document(
            id=f"d{i:03d}",
            title=" ".join(tokens[: length // 2 + 1]),
            abstract=" ".join(tokens[length // 2 + 1:]),
            authors=(f"a{rng.randint(0, 5)}",),
            venue=f"v{rng.randint(0, 3)}",
            year=2000 + rng.randint(0, 12),
            references=(),
        ))
    return Corpus(docs)


@dataclass(frozen=True)
class CheckReport:
    lexical_corpora: int
    lexical_max_abs_diff: float
    lexical_mismatches: int
    submodular_trials: int
    submodular_violations: int
    supermodular_counterexample_flagged: bool

    @property
    def ok(self) -> bool:
        return (self.lexical_mismatches == 0 and self.submodular_violations == 0
                and self.supermodular_counterexample_flagged)

    def to_json(self) -> dict:
        return {
            "lexical": {
                "corpora": self.lexical_corpora,
                "max_abs_diff": self.lexical_max_abs_diff,
                "mismatches": self.lexical_mismatches,
            },
            "submodular": {
                "trials": self.submodular_trials,
                "violations": self.submodular_violations,
                "supermodular_counterexample_flagged": self.supermodular_counterexample_flagged,
            },
            "ok": self.ok,
        }


def run_self_check(seed: int = 0, corpora: int = 25, queries_per_corpus: int = 10,
                   submodular_trials: int = 1000, tolerance: float = 1e-9) -> CheckReport:
    """Index-vs-rescan score comparison plus the submodularity sampler."""
    rng = random.Random(seed)
    tokenizer = Tokenizer()
    max_diff = 0.0
    mismatches = 0
    for _ in range(corpora):
        corpus = random_corpus(rng)
        index = build_index(corpus, tokenizer)
        doc_tokens = [tokenizer.tokenize(query_text(doc)) for doc in corpus]
        for _ in range(queries_per_corpus):
            n_terms = rng.randint(1, 4)
            query = " ".join(rng.choice([f"w{i}" for i in range(30)]) for _ in range(n_terms))
            terms = tokenizer.tokenize(query)
            pos = rng.randrange(len(corpus))
            doc_id = corpus.documents[pos].id
            for fast, naive in ((tfidf_score(index, query, doc_id),
                                 naive_tfidf(doc_tokens, terms, pos)),
                                (bm25_score(index, query, doc_id),
                                 naive_bm25(doc_tokens, terms, pos))):
                diff = abs(fast - naive)
                max_diff = max(max_diff, diff)
                if diff >= tolerance:
                    mismatches += 1

    candidates = [f"c{i}" for i in range(8)]
    rewards = {c: rng.uniform(0.0, 5.0) for c in candidates}
    clusters = (frozenset(candidates[:3]), frozenset(candidates[3:5]), frozenset(candidates[5:]))
    problem = SelectionProblem(candidates=tuple(candidates), budget=4, rewards=rewards,
                               partition=Partition(key="authors", clusters=clusters))
    report = check_submodular(lambda s: qai_objective(problem, s), candidates,
                              trials=submodular_trials, seed=seed)

    # A planted supermodular function must be caught, or the sampler is broken.
    supermodular = lambda s: sum(rewards[c] for c in s) ** 2
    planted = check_submodular(supermodular, candidates, trials=200, seed=seed)

    return CheckReport(
        lexical_corpora=corpora,
        lexical_max_abs_diff=max_diff,
        lexical_mismatches=mismatches,
        submodular_trials=report.trials,
        submodular_violations=len(report.violations),
        supermodular_counterexample_flagged=not planted.ok,
    )
