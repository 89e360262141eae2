"""Tokenization, inverted index, and TF-IDF / BM25 query-document scores.

Both scores sum, over the unique query terms present in the candidate
document, a term-frequency factor times an IDF factor:

    TF-IDF:  sqrt(TF / docLength) * ln(numDocs / (docFreq + 1))
    BM25:    TF*(k+1) / (TF + k*(1 - b + b*docLength/avgdL))
             * ln((numDocs - docFreq + 0.5) / (docFreq + 0.5))

docLength is the candidate document's token count in both scores, and the
logarithm is natural. Negative IDF values (docFreq > numDocs/2 under BM25)
are kept as-is.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable

from .corpus import Corpus, query_text
from .errors import DataError, FormatError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)  # contiguous alphanumeric runs

INDEX_MAGIC = b"CGIX1"


@dataclass(frozen=True)
class Tokenizer:
    """Deterministic tokenizer: alphanumeric runs, lowercased by default."""

    lowercase: bool = True

    def tokenize(self, text: str) -> list[str]:
        if self.lowercase:
            text = text.lower()
        return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class Bm25Params:
    k: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise DataError(f"BM25 parameter k must be positive, got {self.k}")
        if not (0.0 <= self.b <= 1.0):
            raise DataError(f"BM25 parameter b must lie in [0, 1], got {self.b}")


class InvertedIndex:
    """Per-term postings plus the corpus statistics both scores need.

    Postings map each term to {doc position: term frequency}; positions refer
    to ``ids``. The index is immutable after construction.
    """

    def __init__(self, ids: list[str], doc_lengths: list[int],
                 postings: dict[str, dict[int, int]], tokenizer: Tokenizer):
        if len(ids) != len(doc_lengths):
            raise DataError("ids and doc_lengths must have equal length")
        self.ids: list[str] = list(ids)
        self.doc_lengths: list[int] = list(doc_lengths)
        self._postings: dict[str, dict[int, int]] = postings
        self.tokenizer = tokenizer
        self._pos: dict[str, int] = {doc_id: i for i, doc_id in enumerate(ids)}
        if len(self._pos) != len(ids):
            raise DataError("duplicate document id in index")

    @property
    def num_docs(self) -> int:
        return len(self.ids)

    @property
    def avg_doc_length(self) -> float:
        # Recomputed from doc_lengths, never incrementally drifted.
        return sum(self.doc_lengths) / len(self.doc_lengths)

    @property
    def num_terms(self) -> int:
        return len(self._postings)

    def terms(self) -> Iterable[str]:
        return self._postings.keys()

    def postings(self, term: str) -> list[tuple[int, int]]:
        """(doc position, term frequency) pairs, ascending by position."""
        return sorted(self._postings.get(term, {}).items())

    def doc_freq(self, term: str) -> int:
        return len(self._postings.get(term, {}))

    def term_freq(self, term: str, doc_pos: int) -> int:
        return self._postings.get(term, {}).get(doc_pos, 0)

    def position(self, doc_id: str) -> int:
        try:
            return self._pos[doc_id]
        except KeyError:
            raise DataError(f"unknown document id {doc_id!r} in index") from None


def build_index(corpus: Corpus, tokenizer: Tokenizer | None = None) -> InvertedIndex:
    """Index the title+abstract text of every document in the corpus."""
    if len(corpus) == 0:
        raise DataError("cannot build an index over an empty corpus")
    tokenizer = tokenizer or Tokenizer()
    ids: list[str] = []
    doc_lengths: list[int] = []
    postings: dict[str, dict[int, int]] = {}
    for pos, doc in enumerate(corpus):
        tokens = tokenizer.tokenize(query_text(doc))
        ids.append(doc.id)
        doc_lengths.append(len(tokens))
        for token in tokens:
            per_term = postings.setdefault(token, {})
            per_term[pos] = per_term.get(pos, 0) + 1
    return InvertedIndex(ids, doc_lengths, postings, tokenizer)


def _unique_query_terms(index: InvertedIndex, query: str) -> list[str]:
    # Sorted for a deterministic float summation order.
    return sorted(set(index.tokenizer.tokenize(query)))


def tfidf_score(index: InvertedIndex, query: str, doc_id: str) -> float:
    """TF-IDF score of the candidate document against the query."""
    pos = index.position(doc_id)
    doc_length = index.doc_lengths[pos]
    num_docs = index.num_docs
    score = 0.0
    for term in _unique_query_terms(index, query):
        tf = index.term_freq(term, pos)
        if tf == 0:
            continue
        score += math.sqrt(tf / doc_length) * math.log(num_docs / (index.doc_freq(term) + 1))
    return score


def bm25_score(index: InvertedIndex, query: str, doc_id: str,
               params: Bm25Params = Bm25Params()) -> float:
    """BM25 score of the candidate document against the query."""
    pos = index.position(doc_id)
    doc_length = index.doc_lengths[pos]
    num_docs = index.num_docs
    k, b = params.k, params.b
    score = 0.0
    for term in _unique_query_terms(index, query):
        tf = index.term_freq(term, pos)
        if tf == 0:
            continue
        df = index.doc_freq(term)
        norm = k * (1.0 - b + b * doc_length / index.avg_doc_length)
        tf_part = tf * (k + 1.0) / (tf + norm)
        idf_part = math.log((num_docs - df + 0.5) / (df + 0.5))
        score += tf_part * idf_part
    return score


def rank_lexical(index: InvertedIndex, query: str, scorer: str, k: int,
                 params: Bm25Params = Bm25Params(),
                 exclude: frozenset[str] | set[str] = frozenset()) -> list[tuple[str, float]]:
    """Top-k documents by the chosen scorer, descending.

    Ties break by ascending document id. Documents that share no term with
    the query score 0 and are never ranked ahead of documents that do, even
    when a matching document's score is negative.
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if scorer == "tfidf":
        score_fn = lambda doc_id: tfidf_score(index, query, doc_id)
    elif scorer == "bm25":
        score_fn = lambda doc_id: bm25_score(index, query, doc_id, params)
    else:
        raise DataError(f"unknown lexical scorer {scorer!r} (expected 'tfidf' or 'bm25')")

    query_terms = set(index.tokenizer.tokenize(query))
    matched_positions: set[int] = set()
    for term in query_terms:
        matched_positions.update(p for p, _ in index.postings(term))

    entries: list[tuple[int, float, str]] = []
    for pos, doc_id in enumerate(index.ids):
        if doc_id in exclude:
            continue
        if pos in matched_positions:
            entries.append((0, score_fn(doc_id), doc_id))
        else:
            entries.append((1, 0.0, doc_id))
    entries.sort(key=lambda e: (e[0], -e[1], e[2]))
    return [(doc_id, score) for _, score, doc_id in entries[:k]]


# --- CGIX1 persistence ------------------------------------------------------
#
# Little-endian layout:
#   magic "CGIX1", u8 lowercase flag, u32 num_docs,
#   per doc: u16 id length, id bytes (UTF-8), u32 doc length,
#   u32 num_terms, per term (sorted): u16 term length, term bytes,
#   u32 postings count, per posting (ascending position): u32 pos, u32 tf.


def _write_str(fh: BinaryIO, value: str) -> None:
    raw = value.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise FormatError(f"string too long for index file: {value[:32]!r}...")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Write the index in the versioned CGIX1 binary format."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<B", 1 if index.tokenizer.lowercase else 0))
        fh.write(struct.pack("<I", index.num_docs))
        for doc_id, length in zip(index.ids, index.doc_lengths):
            _write_str(fh, doc_id)
            fh.write(struct.pack("<I", length))
        terms = sorted(index.terms())
        fh.write(struct.pack("<I", len(terms)))
        for term in terms:
            _write_str(fh, term)
            postings = index.postings(term)
            fh.write(struct.pack("<I", len(postings)))
            for pos, tf in postings:
                fh.write(struct.pack("<II", pos, tf))


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError(f"{self.path}: truncated index file")
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u16()).decode("utf-8")

    def done(self) -> bool:
        return self.offset == len(self.data)


def load_index(path: str | Path) -> InvertedIndex:
    """Load a CGIX1 index file; round-trips save_index bit-exactly."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read index file {path}: {exc}") from exc
    if data[:len(INDEX_MAGIC)] != INDEX_MAGIC:
        raise FormatError(f"{path}: bad magic bytes (expected {INDEX_MAGIC!r})")
    reader = _Reader(data[len(INDEX_MAGIC):], path)

    lowercase = reader.u8()
    if lowercase not in (0, 1):
        raise FormatError(f"{path}: invalid tokenizer flag {lowercase}")
    num_docs = reader.u32()
    ids: list[str] = []
    doc_lengths: list[int] = []
    for _ in range(num_docs):
        ids.append(reader.string())
        doc_lengths.append(reader.u32())
    postings: dict[str, dict[int, int]] = {}
    for _ in range(reader.u32()):
        term = reader.string()
        if term in postings:
            raise FormatError(f"{path}: duplicate term {term!r}")
        per_term: dict[int, int] = {}
        for _ in range(reader.u32()):
            pos, tf = reader.u32(), reader.u32()
            if pos >= num_docs:
                raise FormatError(f"{path}: posting for {term!r} names document position {pos} "
                                  f"outside the corpus of {num_docs}")
            per_term[pos] = tf
        postings[term] = per_term
    if not reader.done():
        raise FormatError(f"{path}: trailing bytes after index payload")
    return InvertedIndex(ids, doc_lengths, postings, Tokenizer(lowercase=bool(lowercase)))
