"""Readers for the engine's file formats.

The corpus is JSONL with id/title/abstract fields; a document's training text
is its title and abstract joined by a single space. Pair and triplet files
carry a JSON header line followed by one record per line:

    pair:    {"q": id, "d": id, "sim": float, "label": "pos"|"neg"}
    triplet: {"q": id, "pos": id, "neg": id}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class DataFileError(Exception):
    """A training input file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class Pair:
    query_id: str
    other_id: str
    target_sim: float


@dataclass(frozen=True)
class Triplet:
    anchor_id: str
    positive_id: str
    negative_id: str


def load_corpus_texts(path: str | Path) -> dict[str, str]:
    """id -> 'title abstract' for every document in a JSONL corpus."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataFileError(f"cannot read corpus file {path}: {exc}") from exc
    texts: dict[str, str] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFileError(f"{path}:{line_no}: malformed JSON: {exc.msg}") from exc
        try:
            doc_id = record["id"]
            title, abstract = record["title"], record["abstract"]
        except (KeyError, TypeError):
            raise DataFileError(f"{path}:{line_no}: record needs id/title/abstract") from None
        if doc_id in texts:
            raise DataFileError(f"{path}:{line_no}: duplicate id {doc_id!r}")
        texts[doc_id] = " ".join(part for part in (title, abstract) if part)
    if not texts:
        raise DataFileError(f"{path}: corpus is empty")
    return texts


def _read_records(path: Path) -> tuple[dict, list[dict]]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataFileError(f"cannot read {path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise DataFileError(f"{path}:{line_no}: malformed JSON: {exc.msg}") from exc
    if not records:
        raise DataFileError(f"{path}: missing header line")
    return records[0], records[1:]


def load_pairs(path: str | Path) -> tuple[dict, list[Pair]]:
    """Pairs with their file header. Triplet-shaped records are rejected."""
    path = Path(path)
    header, rows = _read_records(path)
    pairs = []
    for row in rows:
        if "pos" in row and "neg" in row:
            raise DataFileError(
                f"{path}: found triplet records; the cosine-regression objective needs pairs")
        try:
            pairs.append(Pair(row["q"], row["d"], float(row["sim"])))
        except (KeyError, TypeError, ValueError):
            raise DataFileError(f"{path}: malformed pair record {row!r}") from None
    return header, pairs


def load_triplets(path: str | Path) -> tuple[dict, list[Triplet]]:
    """Triplets with their file header. Pair-shaped records are rejected."""
    path = Path(path)
    header, rows = _read_records(path)
    triplets = []
    for row in rows:
        if "d" in row and "sim" in row:
            raise DataFileError(
                f"{path}: found pair records; the triplet objective needs triplets")
        try:
            triplets.append(Triplet(row["q"], row["pos"], row["neg"]))
        except (KeyError, TypeError):
            raise DataFileError(f"{path}: malformed triplet record {row!r}") from None
    return header, triplets


def resolve_ids(ids, texts: dict[str, str], source: str) -> None:
    """Every id must resolve to a corpus text."""
    for doc_id in ids:
        if doc_id not in texts:
            raise DataFileError(f"{source}: id {doc_id!r} does not resolve in the corpus")
