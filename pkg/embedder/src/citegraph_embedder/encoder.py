"""Encoder loading and CGEMB1 embedding export.

The export format is the engine's embedding file: magic "CGEMB1", u32 count,
u32 dim (little-endian), then per row a u16-length-prefixed UTF-8 id and
dim float32 components. Inference runs in eval mode with a fixed batch
order, so repeated exports of the same checkpoint are bit-identical.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np
import torch
from sentence_transformers import SentenceTransformer

from .data import DataFileError, load_corpus_texts

logger = logging.getLogger(__name__)

EMBEDDING_MAGIC = b"CGEMB1"


def load_encoder(model_path: str) -> SentenceTransformer:
    """Load a sentence encoder from a local checkpoint directory or model id."""
    try:
        return SentenceTransformer(model_path, device="cpu")
    except Exception as exc:
        raise DataFileError(f"cannot load encoder {model_path!r}: {exc}") from exc


def write_embedding_file(ids: list[str], vectors: np.ndarray, path: str | Path) -> None:
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise DataFileError(f"expected one vector row per id, got shape {vectors.shape}")
    if not np.isfinite(vectors).all():
        raise DataFileError("non-finite embedding component")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", len(ids), vectors.shape[1]))
        for i, doc_id in enumerate(ids):
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise DataFileError(f"id too long for embedding file: {doc_id[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(vectors[i].astype("<f4").tobytes())


def embed_corpus(model: SentenceTransformer, corpus_path: str | Path,
                 out_path: str | Path, batch_size: int = 16) -> int:
    """Embed every corpus document and export CGEMB1; returns the row count."""
    texts = load_corpus_texts(corpus_path)
    ids = list(texts)
    model.eval()
    with torch.no_grad():
        vectors = model.encode([texts[doc_id] for doc_id in ids],
                               batch_size=batch_size,
                               convert_to_numpy=True,
                               normalize_embeddings=False,
                               show_progress_bar=False)
    write_embedding_file(ids, vectors, out_path)
    logger.info("embedded %d documents (dim %d) -> %s", len(ids), vectors.shape[1], out_path)
    return len(ids)
