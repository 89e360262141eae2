"""Operator-facing command line.

Machine-readable JSON goes to stdout, logs go to stderr. Exit codes: 0 on
success, 1 on usage errors, 2 on data errors (including failed checks). The
CITEGRAPH_LOG environment variable (error, info, debug) sets the log level,
and --config can preload flag defaults from a key=value file; explicit flags
always win.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import evaluation, oracles, pairs as pairs_mod, pipeline as pipeline_mod
from .embeddings import load_embeddings
from .errors import CitegraphError, DataError
from .graph import build_graph, write_edge_list
from .lexical import Tokenizer, build_index, load_index, save_index
from .submodular import PARTITION_KEYS, write_trace

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _emit(payload: dict) -> None:
    click.echo(json.dumps(payload))


def _read_id_lines(path: str) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read id list {path}: {exc}") from exc
    return [line.strip() for line in text.splitlines() if line.strip()]


def _coerce(value: str):
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def _load_config_defaults(ctx: click.Context, _param: click.Parameter, path: str | None):
    """Parse a key=value config file into every subcommand's default map."""
    if path is None:
        return None
    defaults: dict[str, object] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.UsageError(f"cannot read config file {path}: {exc}")
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        defaults[key.strip().replace("-", "_")] = _coerce(value.strip())
    ctx.default_map = {name: defaults for name in cli.commands}
    return path


@click.group(name="citegraph")
@click.option("--config", type=click.Path(dir_okay=False), is_eager=True,
              expose_value=False, callback=_load_config_defaults,
              help="Optional key=value file with flag defaults; explicit flags win.")
def cli() -> None:
    """Citation recommendation engine."""


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--split", "split_text", default=None,
              help="TRAIN_MAX,DEV,TEST years, e.g. 2010,2011,2012.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write train/dev/test JSONL files here (requires --split).")
def ingest(corpus_path: str, split_text: str | None, out_dir: str | None) -> None:
    """Load a JSONL corpus, report its shape and optionally split by year."""
    corpus = corpus_mod.load_corpus(corpus_path)
    payload: dict = {
        "documents": len(corpus),
        "dangling_references": len(corpus.dangling_references),
        "documents_without_references": len(corpus.documents_without_references()),
    }
    if split_text is not None:
        spec = corpus_mod.SplitSpec.parse(split_text)
        result = corpus_mod.split_by_year(corpus, spec)
        payload["split"] = {
            "train": len(result.train),
            "dev": len(result.dev),
            "test": len(result.test),
            "dropped": result.num_dropped,
            "excluded_no_refs": result.num_excluded_no_refs,
        }
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            for name, part in (("train", result.train), ("dev", result.dev), ("test", result.test)):
                corpus_mod.write_corpus(part, out / f"{name}.jsonl")
            payload["out_dir"] = str(out)
    elif out_dir is not None:
        raise click.UsageError("--out-dir requires --split")
    _emit(payload)


@cli.command(name="index")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--lowercase/--no-lowercase", default=True, show_default=True)
def index_cmd(corpus_path: str, out_path: str, lowercase: bool) -> None:
    """Build the inverted index over title+abstract and save it (CGIX1)."""
    corpus = corpus_mod.load_corpus(corpus_path)
    idx = build_index(corpus, Tokenizer(lowercase=lowercase))
    save_index(idx, out_path)
    _emit({
        "documents": idx.num_docs,
        "terms": idx.num_terms,
        "avg_doc_length": idx.avg_doc_length,
        "out": out_path,
    })


@cli.command(name="graph")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Optional sorted edge-list export (from_id<TAB>to_id).")
def graph_cmd(corpus_path: str, out_path: str | None) -> None:
    """Build the citation graph and report its shape."""
    corpus = corpus_mod.load_corpus(corpus_path)
    graph = build_graph(corpus)
    if out_path is not None:
        write_edge_list(graph, out_path)
    _emit({
        "nodes": len(graph.nodes),
        "edges": graph.num_edges,
        "skipped_references": graph.num_skipped_references,
        "out": out_path,
    })


@cli.command(name="pairs")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--strategy", type=click.Choice(pairs_mod.STRATEGIES), required=True)
@click.option("--max-d", type=click.IntRange(1, 3), default=2, show_default=True)
@click.option("--theta", type=float, default=0.4, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--emb", "emb_path", default=None, type=click.Path(dir_okay=False),
              help="Embedding file; required for the nearest/farthest strategies.")
@click.option("--triplets", "as_triplets", is_flag=True, help="Emit triplets instead of pairs.")
@click.option("--cross-product", is_flag=True,
              help="With --triplets: emit every (positive, negative) combination.")
@click.option("--queries-file", default=None, type=click.Path(dir_okay=False),
              help="One query id per line; defaults to every corpus document.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def pairs_cmd(corpus_path: str, strategy: str, max_d: int, theta: float, seed: int,
              emb_path: str | None, as_triplets: bool, cross_product: bool,
              queries_file: str | None, out_path: str) -> None:
    """Mine training pairs or triplets from the citation graph."""
    corpus = corpus_mod.load_corpus(corpus_path)
    graph = build_graph(corpus)
    emb = load_embeddings(emb_path) if emb_path else None
    query_ids = _read_id_lines(queries_file) if queries_file is not None else corpus.ids()

    meta = {"seed": seed, "strategy": strategy, "max_d": max_d, "theta": theta}
    if as_triplets:
        batch = pairs_mod.generate_triplets(graph, emb, query_ids, max_d, strategy, seed,
                                            theta=theta, cross_product=cross_product)
        pairs_mod.write_triplets(batch, out_path, **meta)
        count = {"triplets": len(batch.triplets)}
    else:
        if cross_product:
            raise click.UsageError("--cross-product only applies with --triplets")
        batch = pairs_mod.generate_pairs(graph, emb, query_ids, max_d, theta, strategy, seed)
        pairs_mod.write_pairs(batch, out_path, **meta)
        count = {"pairs": len(batch.pairs)}
    _emit({**count, "queries": len(query_ids),
           "shortfalls": dict(sorted(batch.shortfalls.items())), "out": out_path})


def _split_corpora(corpus: corpus_mod.Corpus, split_text: str | None):
    if split_text is None:
        return None
    return corpus_mod.split_by_year(corpus, corpus_mod.SplitSpec.parse(split_text))


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--scorer", type=click.Choice(pipeline_mod.SCORERS), default="bm25", show_default=True)
@click.option("--selector", type=click.Choice(pipeline_mod.SELECTORS), default="topk", show_default=True)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--partition", "partition_key", type=click.Choice(PARTITION_KEYS), default="authors",
              show_default=True)
@click.option("--index", "index_path", default=None, type=click.Path(dir_okay=False),
              help="CGIX1 index; built from the candidate corpus when omitted.")
@click.option("--emb", "emb_path", default=None, type=click.Path(dir_okay=False))
@click.option("--prefilter", type=int, default=None,
              help="Greedy pool bound; default: none for lexical, 1000 for cosine.")
@click.option("--no-prefilter", is_flag=True, help="Force the full candidate pool.")
@click.option("--split", "split_text", default=None,
              help="TRAIN_MAX,DEV,TEST years; candidates come from the train split.")
@click.option("--query-id", default=None, help="Recommend for one corpus document.")
@click.option("--query-text", "query_text_arg", default=None,
              help="Recommend for raw text (lexical scorers).")
@click.option("--queries", "queries_split", type=click.Choice(["dev", "test"]), default=None,
              help="Batch over a split's query documents (requires --split).")
@click.option("--queries-file", default=None, type=click.Path(dir_okay=False),
              help="Batch over ids listed one per line.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="Run file destination for batch mode (default: stdout).")
@click.option("--trace", "trace_path", default=None, type=click.Path(dir_okay=False),
              help="Write the per-step selection trace (single-query mode).")
@click.option("--jobs", type=int, default=1, show_default=True)
def recommend(corpus_path: str, scorer: str, selector: str, k: int, partition_key: str,
              index_path: str | None, emb_path: str | None, prefilter: int | None,
              no_prefilter: bool, split_text: str | None, query_id: str | None,
              query_text_arg: str | None, queries_split: str | None,
              queries_file: str | None, out_path: str | None, trace_path: str | None,
              jobs: int) -> None:
    """Recommend citations for one query or a batch of queries."""
    modes = [m for m in (query_id, query_text_arg, queries_split, queries_file) if m is not None]
    if len(modes) != 1:
        raise click.UsageError(
            "exactly one of --query-id, --query-text, --queries, --queries-file is required")
    if queries_split is not None and split_text is None:
        raise click.UsageError("--queries requires --split")
    if no_prefilter and prefilter is not None:
        raise click.UsageError("--prefilter and --no-prefilter are mutually exclusive")

    corpus = corpus_mod.load_corpus(corpus_path)
    split = _split_corpora(corpus, split_text)
    candidates = split.train if split is not None else corpus

    index = None
    if scorer in ("tfidf", "bm25"):
        index = load_index(index_path) if index_path else build_index(candidates)
    emb = None
    if emb_path is not None:
        emb = load_embeddings(emb_path)
    elif scorer == "cosine":
        raise click.UsageError("--emb is required with --scorer cosine")

    config = pipeline_mod.PipelineConfig(
        scorer=scorer, selector=selector, k=k, partition_key=partition_key,
        prefilter=None if no_prefilter else prefilter if prefilter is not None else "auto",
    )
    logger.info("recommend config: %s", json.dumps(config.to_json()))

    if query_id is not None or query_text_arg is not None:
        query = corpus.get(query_id) if query_id is not None else query_text_arg
        result = pipeline_mod.recommend(config, candidates, index, emb, query)
        if trace_path is not None:
            write_trace(result, trace_path)
        _emit({
            "q": query_id,
            "ranked": list(result.ids),
            "gains": list(result.gains),
            "objective": result.objective,
            "config": config.to_json(),
        })
        return
    if trace_path is not None:
        raise click.UsageError("--trace only applies to single-query mode")

    if queries_split is not None:
        assert split is not None
        query_docs = list(split.dev if queries_split == "dev" else split.test)
    else:
        assert queries_file is not None
        query_docs = [corpus.get(doc_id) for doc_id in _read_id_lines(queries_file)]

    run = pipeline_mod.recommend_batch(config, candidates, index, emb, query_docs, jobs=jobs)
    if out_path is not None:
        evaluation.write_run(run, out_path)
        _emit({"queries": len(run), "out": out_path, "config": config.to_json()})
    else:
        for qid in sorted(run):
            _emit({"q": qid, "ranked": run[qid]})


@cli.command()
@click.option("--run", "run_path", required=True, type=click.Path(dir_okay=False))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(dir_okay=False))
@click.option("--ks", default="10,20,50,100", show_default=True,
              help="Comma-separated cut-offs for F1@k.")
@click.option("--per-query-f1", is_flag=True,
              help="Average per-query F1 instead of harmonic mean of averaged P/R.")
@click.option("--per-query", "show_per_query", is_flag=True, help="Include per-query detail.")
def evaluate_cmd(run_path: str, corpus_path: str, ks: str, per_query_f1: bool,
                 show_per_query: bool) -> None:
    """Score a run file against the corpus reference lists (MRR, F1@k)."""
    corpus = corpus_mod.load_corpus(corpus_path)
    run = evaluation.read_run(run_path)
    truth = {}
    for query_id in run:
        if query_id not in corpus:
            raise DataError(f"run query {query_id!r} is not in the corpus")
        truth[query_id] = frozenset(corpus.resolvable_references(query_id))
    try:
        k_values = [int(part) for part in ks.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(f"--ks must be comma-separated integers, got {ks!r}")
    result = evaluation.evaluate(run, truth, k_values, per_query_f1=per_query_f1)
    payload = result.to_json()
    if show_per_query:
        payload["per_query"] = {
            query_id: {
                "reciprocal_rank": qr.reciprocal_rank,
                "precision": {str(k): v for k, v in sorted(qr.precision_at_k.items())},
                "recall": {str(k): v for k, v in sorted(qr.recall_at_k.items())},
            }
            for query_id, qr in sorted(result.per_query.items())
        }
    _emit(payload)


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--corpora", type=int, default=25, show_default=True,
              help="Random corpora for the index-vs-rescan comparison.")
@click.option("--trials", type=int, default=1000, show_default=True,
              help="Samples for the submodularity check.")
def check(seed: int, corpora: int, trials: int) -> None:
    """Run the self-check oracle suite; nonzero exit on any violation."""
    report = oracles.run_self_check(seed=seed, corpora=corpora, submodular_trials=trials)
    _emit(report.to_json())
    if not report.ok:
        raise DataError("self-check found violations")


def main(argv: list[str] | None = None) -> int:
    """Entry point with the documented exit-code contract."""
    level_name = os.environ.get("CITEGRAPH_LOG", "error").lower()
    if level_name not in _LOG_LEVELS:
        click.echo(f"error: CITEGRAPH_LOG must be one of {sorted(_LOG_LEVELS)}", err=True)
        return 1
    logging.basicConfig(stream=sys.stderr, level=_LOG_LEVELS[level_name],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Abort:
        return 1
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except CitegraphError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
