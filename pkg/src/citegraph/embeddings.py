"""Dense document embeddings: cosine similarity, exact k-NN and file I/O.

The on-disk format (CGEMB1) decouples this engine from whatever encoder
produced the vectors. Comparison is always exhaustive and exact; at the
corpus sizes this engine targets (tens of thousands of documents) an
approximate index would buy nothing.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, FormatError

EMBEDDING_MAGIC = b"CGEMB1"


class EmbeddingMatrix:
    """|ids| x dim matrix of float32 vectors keyed by document id."""

    def __init__(self, ids: Sequence[str], vectors: np.ndarray, normalized: bool = False):
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise DataError(f"embedding matrix must be 2-dimensional, got shape {vectors.shape}")
        if vectors.shape[0] != len(ids):
            raise DataError(f"{len(ids)} ids but {vectors.shape[0]} vector rows")
        if vectors.shape[1] < 1:
            raise DataError("embedding dimension must be >= 1")
        self.ids: list[str] = list(ids)
        self._pos: dict[str, int] = {doc_id: i for i, doc_id in enumerate(self.ids)}
        if len(self._pos) != len(self.ids):
            raise DataError("duplicate document id in embedding matrix")
        bad = ~np.isfinite(vectors)
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            raise DataError(f"non-finite component in embedding for id {self.ids[row]!r}")
        self.vectors: np.ndarray = vectors
        self.normalized: bool = normalized
        if normalized:
            norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
            off = np.abs(norms - 1.0) > 1e-6
            if off.any():
                row = int(np.argmax(off))
                raise DataError(
                    f"matrix marked normalized but row for id {self.ids[row]!r} "
                    f"has L2 norm {norms[row]:.8f}"
                )

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._pos

    def vector(self, doc_id: str) -> np.ndarray:
        try:
            return self.vectors[self._pos[doc_id]]
        except KeyError:
            raise DataError(f"unknown document id {doc_id!r} in embedding matrix") from None

    def normalize(self) -> "EmbeddingMatrix":
        """A copy with unit-norm rows. Zero vectors are rejected."""
        norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        zero = norms == 0.0
        if zero.any():
            row = int(np.argmax(zero))
            raise DataError(f"cannot normalize zero vector for id {self.ids[row]!r}")
        unit = (self.vectors.astype(np.float64) / norms[:, None]).astype(np.float32)
        return EmbeddingMatrix(self.ids, unit, normalized=True)


def cosine(emb: EmbeddingMatrix, a: str, b: str) -> float:
    """cos(a, b) in [-1, 1]; accumulates in float64."""
    va = emb.vector(a).astype(np.float64)
    vb = emb.vector(b).astype(np.float64)
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        zero_id = a if na == 0.0 else b
        raise DataError(f"cosine undefined for zero vector (id {zero_id!r})")
    value = float(np.dot(va, vb) / (na * nb))
    return min(1.0, max(-1.0, value))


def knn(emb: EmbeddingMatrix, query_vec: Sequence[float] | np.ndarray, k: int,
        exclude: Iterable[str] = ()) -> list[tuple[str, float]]:
    """Top-k ids by cosine similarity to the query vector, exhaustive scan.

    Descending similarity, ties broken by ascending id. Excluded ids are
    skipped entirely.
    """
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    query = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if query.shape[0] != emb.dim:
        raise DataError(f"query vector has dimension {query.shape[0]}, matrix has {emb.dim}")
    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        raise DataError("cosine undefined for a zero query vector")

    excluded = set(exclude)
    keep = [i for i, doc_id in enumerate(emb.ids) if doc_id not in excluded]
    if not keep:
        return []
    rows = emb.vectors[keep].astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    if zero.any():
        row = keep[int(np.argmax(zero))]
        raise DataError(f"cosine undefined for zero vector (id {emb.ids[row]!r})")
    sims = rows @ query / (norms * qnorm)
    np.clip(sims, -1.0, 1.0, out=sims)
    scored = [(emb.ids[keep[i]], float(sims[i])) for i in range(len(keep))]
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:k]


# --- CGEMB1 persistence ------------------------------------------------------
#
# Little-endian layout: magic "CGEMB1", u32 count, u32 dim, then per row:
# u16 id length, id bytes (UTF-8), dim * f32 components.


def save_embeddings(emb: EmbeddingMatrix, path: str | Path) -> None:
    """Write the matrix in the CGEMB1 binary format (bit-exact round trip)."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", len(emb), emb.dim))
        for i, doc_id in enumerate(emb.ids):
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise FormatError(f"id too long for embedding file: {doc_id[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(emb.vectors[i].astype("<f4").tobytes())


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Load a CGEMB1 file, validating magic, dimension, ids and components."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read embedding file {path}: {exc}") from exc
    if data[:len(EMBEDDING_MAGIC)] != EMBEDDING_MAGIC:
        raise FormatError(f"{path}: bad magic bytes (expected {EMBEDDING_MAGIC!r})")
    offset = len(EMBEDDING_MAGIC)

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise FormatError(f"{path}: truncated embedding file")
        chunk = data[offset:offset + n]
        offset += n
        return chunk

    count, dim = struct.unpack("<II", take(8))
    if dim == 0:
        raise FormatError(f"{path}: embedding dimension must be >= 1")
    ids: list[str] = []
    seen: set[str] = set()
    rows = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        (id_len,) = struct.unpack("<H", take(2))
        doc_id = take(id_len).decode("utf-8")
        if doc_id in seen:
            raise FormatError(f"{path}: duplicate id {doc_id!r}")
        seen.add(doc_id)
        ids.append(doc_id)
        row = np.frombuffer(take(dim * 4), dtype="<f4")
        if not np.isfinite(row).all():
            raise FormatError(f"{path}: non-finite component in embedding for id {doc_id!r}")
        rows[i] = row
    if offset != len(data):
        raise FormatError(f"{path}: trailing bytes after embedding payload")
    return EmbeddingMatrix(ids, rows)
