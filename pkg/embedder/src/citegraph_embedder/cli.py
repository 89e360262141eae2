"""Command line: `train` fine-tunes a checkpoint, `embed` exports CGEMB1."""

from __future__ import annotations

import json
import logging
import sys

import click

from .data import DataFileError
from .encoder import embed_corpus, load_encoder
from .training import OBJECTIVES, TrainConfig, train

logger = logging.getLogger(__name__)


@click.group(name="citegraph-embedder")
def cli() -> None:
    """Sentence-encoder fine-tuning and embedding export."""


@cli.command(name="train")
@click.option("--examples", "examples_path", required=True, type=click.Path(dir_okay=False),
              help="Pair file for siamese-mse, triplet file for triplet.")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--objective", type=click.Choice(OBJECTIVES), default="siamese-mse",
              show_default=True)
@click.option("--base-model", default="distilbert-base-uncased", show_default=True,
              help="Pre-trained encoder id or local checkpoint directory.")
@click.option("--learning-rate", type=float, default=2e-5, show_default=True)
@click.option("--batch-size", type=int, default=16, show_default=True)
@click.option("--epochs", type=int, default=1, show_default=True)
@click.option("--margin", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def train_cmd(examples_path: str, corpus_path: str, objective: str, base_model: str,
              learning_rate: float, batch_size: int, epochs: int, margin: float,
              seed: int, out_dir: str) -> None:
    """Fine-tune the encoder on mined pairs or triplets."""
    config = TrainConfig(base_model=base_model, objective=objective,
                         learning_rate=learning_rate, batch_size=batch_size,
                         epochs=epochs, margin=margin, seed=seed)
    result = train(config, examples_path, corpus_path, out_dir)
    click.echo(json.dumps({
        "objective": objective,
        "examples": result.num_examples,
        "epoch_losses": list(result.epoch_losses),
        "checkpoint": result.checkpoint,
    }))


@cli.command(name="embed")
@click.option("--model", "model_path", required=True,
              help="Checkpoint directory or encoder id.")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--batch-size", type=int, default=16, show_default=True)
def embed_cmd(model_path: str, corpus_path: str, out_path: str, batch_size: int) -> None:
    """Export one embedding per corpus document in the CGEMB1 format."""
    model = load_encoder(model_path)
    count = embed_corpus(model, corpus_path, out_path, batch_size=batch_size)
    click.echo(json.dumps({"documents": count, "out": out_path}))


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except DataFileError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
