"""Fine-tuning the sentence encoder on mined pairs or triplets.

Two objectives:

  siamese-mse  (pair files): regress the cosine of the two encoded documents
              onto the pair's target similarity with an MSE loss.
  triplet     (triplet files): hinge on a unit margin between the anchor's
              cosine to its positive and to its negative,
              max(cos(a, n) - cos(a, p) + margin, 0).

The loop is deliberately plain: seeded shuffling, fixed-size batches, AdamW,
one mean loss recorded per epoch.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from sentence_transformers import SentenceTransformer, losses

from .data import DataFileError, load_corpus_texts, load_pairs, load_triplets, resolve_ids

logger = logging.getLogger(__name__)

OBJECTIVES = ("siamese-mse", "triplet")


@dataclass(frozen=True)
class TrainConfig:
    base_model: str = "distilbert-base-uncased"
    objective: str = "siamese-mse"
    learning_rate: float = 2e-5
    batch_size: int = 16
    epochs: int = 1
    margin: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.objective not in OBJECTIVES:
            raise DataFileError(f"unknown objective {self.objective!r} "
                                f"(expected one of {OBJECTIVES})")
        if self.epochs < 1 or self.batch_size < 1:
            raise DataFileError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class TrainResult:
    epoch_losses: tuple[float, ...]
    num_examples: int
    checkpoint: str
    config: TrainConfig = field(repr=False, default=TrainConfig())


def triplet_hinge(s_pos: float, s_neg: float, margin: float = 1.0) -> float:
    """The reference hinge on similarity scores: max(s_neg - s_pos + margin, 0)."""
    return max(s_neg - s_pos + margin, 0.0)


def _batches(items: list, batch_size: int, rng: random.Random):
    order = list(range(len(items)))
    rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        yield [items[i] for i in order[start:start + batch_size]]


def _encode_features(model: SentenceTransformer, texts: list[str]) -> dict:
    # sentence-transformers 5.x renamed tokenize -> preprocess; support both.
    preprocess = getattr(model, "preprocess", None) or model.tokenize
    return preprocess(texts)


def train(config: TrainConfig, examples_path: str | Path, corpus_path: str | Path,
          out_dir: str | Path, model: SentenceTransformer | None = None) -> TrainResult:
    """Fine-tune and save a checkpoint; records one mean loss per epoch.

    The examples file must match the objective: pair records for siamese-mse,
    triplet records for triplet. Every id must resolve in the corpus.
    """
    texts = load_corpus_texts(corpus_path)
    if config.objective == "siamese-mse":
        header, pairs = load_pairs(examples_path)
        for pair in pairs:
            resolve_ids((pair.query_id, pair.other_id), texts, str(examples_path))
        examples = [((texts[p.query_id], texts[p.other_id]), p.target_sim) for p in pairs]
    else:
        header, triplets = load_triplets(examples_path)
        for t in triplets:
            resolve_ids((t.anchor_id, t.positive_id, t.negative_id), texts, str(examples_path))
        examples = [((texts[t.anchor_id], texts[t.positive_id], texts[t.negative_id]), None)
                    for t in triplets]
    if not examples:
        raise DataFileError(f"{examples_path}: no training examples")
    logger.info("training on %d examples from %s (header %s)",
                len(examples), examples_path, header)

    torch.manual_seed(config.seed)
    if model is None:
        model = SentenceTransformer(config.base_model, device="cpu")
    model.train()

    if config.objective == "siamese-mse":
        loss_fn = losses.CosineSimilarityLoss(model)
    else:
        loss_fn = losses.TripletLoss(
            model,
            distance_metric=losses.TripletDistanceMetric.COSINE,
            triplet_margin=config.margin,
        )
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)

    epoch_losses: list[float] = []
    rng = random.Random(config.seed)
    for epoch in range(config.epochs):
        total, seen = 0.0, 0
        for batch in _batches(examples, config.batch_size, rng):
            optimizer.zero_grad()
            group_texts = list(zip(*(ex[0] for ex in batch)))
            features = [_encode_features(model, list(side)) for side in group_texts]
            if config.objective == "siamese-mse":
                labels = torch.tensor([ex[1] for ex in batch], dtype=torch.float32)
            else:
                labels = torch.zeros(len(batch))  # unused by the triplet hinge
            loss = loss_fn(features, labels)
            loss.backward()
            optimizer.step()
            total += loss.detach().item() * len(batch)
            seen += len(batch)
        epoch_losses.append(total / seen)
        logger.info("epoch %d/%d: mean loss %.6f", epoch + 1, config.epochs, epoch_losses[-1])

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.eval()
    model.save(str(out_dir))
    return TrainResult(tuple(epoch_losses), len(examples), str(out_dir), config)


def triplet_scores(model: SentenceTransformer, anchor: str, positive: str,
                   negative: str) -> tuple[float, float, float]:
    """(s_pos, s_neg, hinge loss) for one triplet of raw texts.

    This is the value the trainer logs; it must agree with the engine's
    triplet-loss operation on the same similarity inputs.
    """
    model.eval()
    with torch.no_grad():
        emb = model.encode([anchor, positive, negative], convert_to_numpy=False,
                           convert_to_tensor=True, show_progress_bar=False)
    s_pos = float(torch.nn.functional.cosine_similarity(emb[0], emb[1], dim=0))
    s_neg = float(torch.nn.functional.cosine_similarity(emb[0], emb[2], dim=0))
    return s_pos, s_neg, triplet_hinge(s_pos, s_neg)
