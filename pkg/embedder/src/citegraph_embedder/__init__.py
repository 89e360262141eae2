"""Sentence-encoder fine-tuning and embedding export for the citegraph engine."""

from .data import DataFileError, load_corpus_texts, load_pairs, load_triplets
from .encoder import embed_corpus, load_encoder, write_embedding_file
from .training import TrainConfig, TrainResult, train, triplet_hinge, triplet_scores

__version__ = "0.1.0"

__all__ = [
    "DataFileError",
    "TrainConfig",
    "TrainResult",
    "embed_corpus",
    "load_corpus_texts",
    "load_encoder",
    "load_pairs",
    "load_triplets",
    "train",
    "triplet_hinge",
    "triplet_scores",
    "write_embedding_file",
]
