"""Document model, JSONL corpus ingestion and year-based splits."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DataError

logger = logging.getLogger(__name__)

_REQUIRED_FIELDS = ("id", "title", "abstract", "authors", "venue", "year", "references")


@dataclass(frozen=True)
class Document:
    """One corpus record. ``references`` holds outgoing citation ids."""

    id: str
    title: str
    abstract: str
    authors: tuple[str, ...]
    venue: str
    year: int
    references: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("document id must be non-empty")
        if not (1000 <= self.year <= 9999):
            raise DataError(f"document {self.id!r}: year {self.year} is not a 4-digit positive integer")
        if len(set(self.references)) != len(self.references):
            raise DataError(f"document {self.id!r}: duplicate entries in references")
        if self.id in self.references:
            raise DataError(f"document {self.id!r}: references contain the document's own id")


def query_text(doc: Document) -> str:
    """Title and abstract joined by a single space; empty parts are dropped."""
    return " ".join(part for part in (doc.title, doc.abstract) if part)


@dataclass(frozen=True)
class SplitSpec:
    """Year boundaries: train <= train_max_year, dev == dev_year, test == test_year."""

    train_max_year: int
    dev_year: int
    test_year: int

    def __post_init__(self) -> None:
        if not (self.train_max_year < self.dev_year < self.test_year):
            raise DataError(
                f"invalid split spec: need train_max_year < dev_year < test_year, "
                f"got ({self.train_max_year}, {self.dev_year}, {self.test_year})"
            )

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        """Parse 'TRAIN_MAX,DEV,TEST', e.g. '2010,2011,2012'."""
        parts = text.split(",")
        if len(parts) != 3:
            raise DataError(f"split spec {text!r} must have exactly three comma-separated years")
        try:
            years = [int(p) for p in parts]
        except ValueError as exc:
            raise DataError(f"split spec {text!r} contains a non-integer year") from exc
        return cls(*years)


class Corpus:
    """Immutable ordered collection of documents with an id -> position index.

    References that do not resolve within the corpus are kept on the documents
    but flagged as dangling (counted, never silently dropped).
    """

    def __init__(self, documents: Iterable[Document]):
        self.documents: tuple[Document, ...] = tuple(documents)
        self.index: dict[str, int] = {}
        for pos, doc in enumerate(self.documents):
            if doc.id in self.index:
                raise DataError(f"duplicate document id {doc.id!r}")
            self.index[doc.id] = pos

        dangling: set[str] = set()
        for doc in self.documents:
            dangling.update(ref for ref in doc.references if ref not in self.index)
        self._dangling: frozenset[str] = frozenset(dangling)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.index

    def get(self, doc_id: str) -> Document:
        try:
            return self.documents[self.index[doc_id]]
        except KeyError:
            raise DataError(f"unknown document id {doc_id!r}") from None

    def position(self, doc_id: str) -> int:
        try:
            return self.index[doc_id]
        except KeyError:
            raise DataError(f"unknown document id {doc_id!r}") from None

    def ids(self) -> list[str]:
        return [doc.id for doc in self.documents]

    @property
    def dangling_references(self) -> frozenset[str]:
        """Referenced ids that do not resolve within this corpus."""
        return self._dangling

    def resolvable_references(self, doc_id: str) -> list[str]:
        """The document's references restricted to ids present in the corpus."""
        return [ref for ref in self.get(doc_id).references if ref in self.index]

    def documents_without_references(self) -> list[str]:
        """Ids of documents whose reference list is empty."""
        return [doc.id for doc in self.documents if not doc.references]


def _parse_record(record: dict, line_no: int, path: Path) -> Document:
    for key in _REQUIRED_FIELDS:
        if key not in record:
            raise DataError(f"{path}:{line_no}: record is missing field {key!r}")
    rid = record["id"]
    if not isinstance(rid, str) or not rid:
        raise DataError(f"{path}:{line_no}: 'id' must be a non-empty string")
    for key in ("title", "abstract", "venue"):
        if not isinstance(record[key], str):
            raise DataError(f"{path}:{line_no}: {key!r} must be a string (id {rid!r})")
    if not isinstance(record["year"], int) or isinstance(record["year"], bool):
        raise DataError(f"{path}:{line_no}: 'year' must be an integer (id {rid!r})")
    for key in ("authors", "references"):
        value = record[key]
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise DataError(f"{path}:{line_no}: {key!r} must be a list of strings (id {rid!r})")

    # Normalize references: drop duplicates (order kept) and self-citations.
    seen: set[str] = set()
    references: list[str] = []
    for ref in record["references"]:
        if ref == rid or ref in seen:
            continue
        seen.add(ref)
        references.append(ref)
    dropped = len(record["references"]) - len(references)
    if dropped:
        logger.debug("%s:%d: document %r: normalized away %d duplicate/self reference(s)",
                     path, line_no, rid, dropped)

    return Document(
        id=rid,
        title=record["title"],
        abstract=record["abstract"],
        authors=tuple(record["authors"]),
        venue=record["venue"],
        year=record["year"],
        references=tuple(references),
    )


def load_corpus(path: str | Path) -> Corpus:
    """Load a JSONL corpus, one document per line.

    Raises DataError on a malformed record (with the line number), a duplicate
    id, or an unreadable file. Documents with empty references are retained;
    the split operation excludes them from dev/test.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc

    documents: list[Document] = []
    seen_ids: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: malformed JSON record: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise DataError(f"{path}:{line_no}: record is not a JSON object")
        doc = _parse_record(record, line_no, path)
        if doc.id in seen_ids:
            raise DataError(
                f"{path}:{line_no}: duplicate document id {doc.id!r} "
                f"(first seen on line {seen_ids[doc.id]})"
            )
        seen_ids[doc.id] = line_no
        documents.append(doc)

    corpus = Corpus(documents)
    if corpus.dangling_references:
        logger.info("%s: %d dangling reference id(s)", path, len(corpus.dangling_references))
    no_refs = corpus.documents_without_references()
    if no_refs:
        logger.info("%s: %d document(s) without references", path, len(no_refs))
    return corpus


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus back to JSONL with the canonical field order."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in corpus:
            fh.write(json.dumps({
                "id": doc.id,
                "title": doc.title,
                "abstract": doc.abstract,
                "authors": list(doc.authors),
                "venue": doc.venue,
                "year": doc.year,
                "references": list(doc.references),
            }, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class SplitResult:
    """Year-based corpus partition plus bookkeeping counts.

    len(train) + len(dev) + len(test) + num_dropped + num_excluded_no_refs
    always equals the size of the input corpus.
    """

    train: Corpus
    dev: Corpus
    test: Corpus
    num_dropped: int
    excluded_no_refs: tuple[str, ...] = field(default=())

    @property
    def num_excluded_no_refs(self) -> int:
        return len(self.excluded_no_refs)


def split_by_year(corpus: Corpus, spec: SplitSpec) -> SplitResult:
    """Partition a corpus into train/dev/test by publication year.

    Train keeps every document with year <= train_max_year. Dev and test take
    the documents of their exact year but exclude documents with zero
    resolvable references (they cannot serve as evaluation queries). Documents
    outside all three ranges are dropped with a count.
    """
    train: list[Document] = []
    dev: list[Document] = []
    test: list[Document] = []
    excluded: list[str] = []
    dropped = 0
    for doc in corpus:
        if doc.year <= spec.train_max_year:
            train.append(doc)
        elif doc.year in (spec.dev_year, spec.test_year):
            if not corpus.resolvable_references(doc.id):
                excluded.append(doc.id)
            elif doc.year == spec.dev_year:
                dev.append(doc)
            else:
                test.append(doc)
        else:
            dropped += 1
    if dropped:
        logger.info("split: dropped %d document(s) outside the year ranges", dropped)
    if excluded:
        logger.info("split: excluded %d dev/test document(s) without resolvable references", len(excluded))
    return SplitResult(
        train=Corpus(train),
        dev=Corpus(dev),
        test=Corpus(test),
        num_dropped=dropped,
        excluded_no_refs=tuple(excluded),
    )
