import json
import string

import pytest
import torch
from sentence_transformers import SentenceTransformer, models
from transformers import BertConfig, BertModel, BertTokenizerFast


def build_tiny_encoder(target_dir, seed=0, hidden=32):
    """A small random-weight wordpiece encoder, built entirely offline."""
    target_dir.mkdir(parents=True, exist_ok=True)
    vocab = (["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
             + list(string.ascii_lowercase)
             + ["##" + c for c in string.ascii_lowercase]
             + list(string.digits))
    vocab_file = target_dir / "vocab.txt"
    vocab_file.write_text("\n".join(vocab), encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    tokenizer.save_pretrained(str(target_dir))

    torch.manual_seed(seed)
    config = BertConfig(vocab_size=len(vocab), hidden_size=hidden,
                        num_hidden_layers=1, num_attention_heads=2,
                        intermediate_size=2 * hidden, max_position_embeddings=64)
    BertModel(config).save_pretrained(str(target_dir))

    word = models.Transformer(str(target_dir), max_seq_length=32)
    get_dim = getattr(word, "get_embedding_dimension", None) or word.get_word_embedding_dimension
    pooling = models.Pooling(get_dim(), pooling_mode="mean")
    return SentenceTransformer(modules=[word, pooling], device="cpu")


@pytest.fixture(scope="session")
def tiny_encoder_dir(tmp_path_factory):
    """Checkpoint directory of a tiny encoder, reusable across tests."""
    base = tmp_path_factory.mktemp("tiny-base")
    model = build_tiny_encoder(base / "hf")
    checkpoint = base / "encoder"
    model.save(str(checkpoint))
    return checkpoint


@pytest.fixture
def tiny_encoder(tiny_encoder_dir):
    return SentenceTransformer(str(tiny_encoder_dir), device="cpu")


def write_corpus(path, docs):
    """docs: list of (id, title, abstract)."""
    with path.open("w", encoding="utf-8") as fh:
        for doc_id, title, abstract in docs:
            fh.write(json.dumps({
                "id": doc_id, "title": title, "abstract": abstract,
                "authors": ["a"], "venue": "v", "year": 2005, "references": [],
            }) + "\n")


def write_examples(path, header, records):
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for record in records:
            fh.write(json.dumps(record) + "\n")


WORDS = ["citation", "graph", "neural", "parser", "corpus", "metric", "model",
         "ranking", "vector", "index", "study", "deep", "score", "text"]


@pytest.fixture
def toy_task(tmp_path):
    """A 20-doc corpus plus a 50-pair file and a matching triplet file."""
    import random
    rng = random.Random(5)
    docs = []
    for i in range(20):
        title = " ".join(rng.choice(WORDS) for _ in range(3))
        abstract = " ".join(rng.choice(WORDS) for _ in range(5))
        docs.append((f"d{i:02d}", title, abstract))
    corpus_path = tmp_path / "corpus.jsonl"
    write_corpus(corpus_path, docs)

    header = {"seed": 1, "strategy": "random", "max_d": 2, "theta": 0.4}
    pair_records = []
    for i in range(50):
        q = f"d{rng.randrange(20):02d}"
        other = f"d{rng.randrange(20):02d}"
        positive = i % 2 == 0
        pair_records.append({"q": q, "d": other,
                             "sim": 0.4 if positive else 0.0,
                             "label": "pos" if positive else "neg"})
    pairs_path = tmp_path / "pairs.jsonl"
    write_examples(pairs_path, header, pair_records)

    triplet_records = [{"q": f"d{rng.randrange(20):02d}",
                        "pos": f"d{rng.randrange(20):02d}",
                        "neg": f"d{rng.randrange(20):02d}"} for _ in range(30)]
    triplets_path = tmp_path / "triplets.jsonl"
    write_examples(triplets_path, header, triplet_records)

    return corpus_path, pairs_path, triplets_path
