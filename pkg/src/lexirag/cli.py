"""Command line interface; thin wrappers over the core package."""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bm25 import build_inverted_index, save_index
from .config import load_config
from .corpus import ingest_files, load_corpus, save_corpus
from .datagen import (
    build_eval_set,
    generate_intent_dataset,
    generate_qa,
    load_answer_templates,
    load_question_templates,
    read_intent_tsv,
    read_qa_items,
    write_intent_tsv,
    write_qa_items,
    write_qrels,
)
from .dense import build_vector_index, embed_batch, save_vectors
from .engine import (
    BM25_INDEX_FILE,
    INTENT_MODEL_FILE,
    VECTOR_INDEX_FILE,
    build_providers,
    load_engine,
)
from .errors import LexiragError
from .evalkit import (
    agreement,
    exact_match_judge,
    judge,
    map_metric,
    mrr,
    read_qrels,
    read_run,
    read_score_pairs,
    recall_at_k,
)
from .fusion import make_rerank_pairs, write_rerank_pairs
from .intent import (
    classify_intent,
    fit_tfidf,
    load_intent_model,
    save_intent_model,
    train_forest,
    vectorize,
)
from .pipeline import PipelineConfig, RetrievalMode


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LexiragError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group(no_args_is_help=False)
@click.version_option(__version__)
def cli():
    """Dictionary-grounded retrieval and question answering."""


@cli.command()
@click.option("--entries", required=True, type=click.Path(exists=True))
@click.option("--roots", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@handle_errors
def ingest(entries, roots, out_dir):
    """Ingest entry/root JSON Lines files into a corpus directory."""
    corpus = ingest_files(entries, roots)
    save_corpus(corpus, out_dir)
    report = corpus.ingest_report
    click.echo(
        f"ingested {report.kept_entries} entries, {report.kept_roots} roots; "
        f"dropped {report.dropped_total} ({json.dumps(dict(report.dropped), ensure_ascii=False)})"
    )


@cli.group()
def index():
    """Build retrieval indexes under a corpus directory."""


@index.command("build")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@handle_errors
def index_build(corpus_dir):
    """Build the BM25 inverted index."""
    corpus = load_corpus(corpus_dir)
    idx = build_inverted_index(corpus.documents)
    save_index(idx, Path(corpus_dir) / BM25_INDEX_FILE)
    click.echo(f"indexed {idx.doc_count} documents, {len(idx.postings)} terms")


@index.command("embed")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--embed-endpoint", default=None)
@click.option("--embed-model", default="")
@click.option("--embed-dim", default=0, type=int)
@click.option("--embed-file", default=None, type=click.Path(exists=True),
              help="JSONL text->vector pairs for the file-backed provider")
@click.option("--batch-size", default=64, type=int)
@handle_errors
def index_embed(corpus_dir, embed_endpoint, embed_model, embed_dim, embed_file, batch_size):
    """Embed all documents and build the dense vector index."""
    embedder, _, _ = build_providers(
        embed_endpoint=embed_endpoint, embed_model=embed_model,
        embed_dim=embed_dim, embed_file=embed_file,
    )
    if embedder is None:
        click.echo("error: provide --embed-endpoint or --embed-file", err=True)
        sys.exit(2)
    corpus = load_corpus(corpus_dir)
    texts = [doc.text for doc in corpus.documents]
    ids = [doc.doc_id for doc in corpus.documents]
    vectors = []
    for start in range(0, len(texts), batch_size):
        vectors.extend(embed_batch(embedder, texts[start : start + batch_size]))
    vec_index = build_vector_index(vectors, ids)
    save_vectors(Path(corpus_dir) / VECTOR_INDEX_FILE, vec_index)
    click.echo(f"embedded {len(vec_index)} documents at dimension {vec_index.dimension}")


@cli.group()
def intent():
    """Train and query the intent classifier."""


@intent.command("train")
@click.option("--data", required=True, type=click.Path(exists=True),
              help="TSV: query<TAB>fine_label")
@click.option("--trees", default=200, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", default=INTENT_MODEL_FILE, type=click.Path())
@handle_errors
def intent_train(data, trees, seed, out_path):
    """Train the random-forest intent model."""
    rows = read_intent_tsv(data)
    if not rows:
        click.echo("error: training data is empty", err=True)
        sys.exit(1)
    questions = [q for q, _ in rows]
    labels = [label for _, label in rows]
    vocab = fit_tfidf(questions)
    features = np.stack([vectorize(vocab, q) for q in questions])
    try:
        model = train_forest(features, labels, n_trees=trees, seed=seed)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    save_intent_model(out_path, model, vocab)
    click.echo(f"trained {trees} trees on {len(rows)} queries -> {out_path}")


@intent.command("predict")
@click.option("--text", required=True)
@click.option("--model", "model_path", default=INTENT_MODEL_FILE, type=click.Path())
@click.option("--threshold", default=0.6, type=float)
@handle_errors
def intent_predict(text, model_path, threshold):
    """Classify one query and print its routing intent and confidence."""
    model, vocab = load_intent_model(model_path)
    label, confidence = classify_intent(model, vocab, text, threshold)
    click.echo(f"{label.value}\t{confidence:.3f}")


@cli.group()
def rerank():
    """Reranker training data utilities."""


@rerank.command("pairs")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--n-pos", required=True, type=int)
@click.option("--n-neg", required=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def rerank_pairs(qa_path, corpus_dir, n_pos, n_neg, seed, out_path):
    """Sample positive/negative reranker pairs into a TSV file."""
    corpus = load_corpus(corpus_dir)
    items = read_qa_items(qa_path)
    pairs = make_rerank_pairs(items, corpus, n_pos=n_pos, n_neg=n_neg, seed=seed)
    write_rerank_pairs(out_path, pairs)
    click.echo(f"wrote {len(pairs)} pairs ({n_pos} positive, {n_neg} negative) -> {out_path}")


@cli.group()
def datagen():
    """Generate QA, intent and evaluation datasets from a corpus."""


@datagen.command("qa")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, type=int)
@click.option("--templates", "templates_dir", default=None, type=click.Path(exists=True))
@click.option("--answers", "answers_dir", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def datagen_qa(corpus_dir, seed, templates_dir, answers_dir, out_path):
    """Generate template-based question/answer items."""
    corpus = load_corpus(corpus_dir)
    questions = load_question_templates(templates_dir) if templates_dir else None
    answers = load_answer_templates(answers_dir) if answers_dir else None
    result = generate_qa(corpus, templates=questions, answer_templates=answers, seed=seed)
    write_qa_items(out_path, result.items)
    skipped = json.dumps(dict(result.skipped), ensure_ascii=False)
    click.echo(f"generated {len(result.items)} items (skipped per intent: {skipped}) -> {out_path}")


@datagen.command("intent")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True))
@click.option("--per-class", required=True, type=int)
@click.option("--test-fraction", default=0.2, type=float)
@click.option("--seed", default=0, type=int)
@click.option("--out-train", required=True, type=click.Path())
@click.option("--out-test", required=True, type=click.Path())
@handle_errors
def datagen_intent(qa_path, per_class, test_fraction, seed, out_train, out_test):
    """Build a balanced intent-classification dataset with a train/test split."""
    items = read_qa_items(qa_path)
    dataset = generate_intent_dataset(items, per_class=per_class, seed=seed,
                                      test_fraction=test_fraction)
    write_intent_tsv(out_train, dataset.train)
    write_intent_tsv(out_test, dataset.test)
    click.echo(f"wrote {len(dataset.train)} train rows, {len(dataset.test)} test rows")


@datagen.command("eval")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--filter", "which", default="all",
              type=click.Choice(["all", "quran-hadith"]))
@click.option("--seed", default=0, type=int)
@click.option("--limit", default=None, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--qrels", "qrels_path", default=None, type=click.Path())
@handle_errors
def datagen_eval(qa_path, corpus_dir, which, seed, limit, out_path, qrels_path):
    """Build the answer-evaluation set, optionally Qur'an/Hadith only."""
    corpus = load_corpus(corpus_dir)
    items = read_qa_items(qa_path)
    eval_set = build_eval_set(items, corpus, which=which.replace("-", "_"),
                              seed=seed, limit=limit)
    write_qa_items(out_path, eval_set.items)
    if qrels_path:
        write_qrels(qrels_path, eval_set.items)
    if eval_set.warning:
        click.echo(f"warning: {eval_set.warning}", err=True)
    dist = json.dumps(eval_set.distribution, ensure_ascii=False)
    click.echo(f"wrote {len(eval_set.items)} items -> {out_path}; distribution: {dist}")


def engine_options(fn):
    fn = click.option("--corpus", "corpus_dir", required=True,
                      type=click.Path(exists=True))(fn)
    fn = click.option("--model", "intent_model_path", default=None, type=click.Path())(fn)
    fn = click.option("--stopwords", "stopwords_path", default=None,
                      type=click.Path(exists=True))(fn)
    fn = click.option("--exemplars", "exemplars_dir", default=None,
                      type=click.Path(exists=True))(fn)
    fn = click.option("--embed-endpoint", default=None)(fn)
    fn = click.option("--embed-model", default="")(fn)
    fn = click.option("--embed-dim", default=0, type=int)(fn)
    fn = click.option("--embed-file", default=None, type=click.Path(exists=True))(fn)
    fn = click.option("--rerank-endpoint", default=None)(fn)
    fn = click.option("--rerank-model", default="")(fn)
    fn = click.option("--llm-endpoint", default=None)(fn)
    fn = click.option("--llm-model", default="")(fn)
    return fn


def _load_cli_engine(corpus_dir, mode, k, intent_model_path, stopwords_path, exemplars_dir,
                     **provider_flags):
    embedder, scorer, generator = build_providers(**provider_flags)
    config = PipelineConfig(retrieval_mode=RetrievalMode(mode)) if mode else PipelineConfig()
    return load_engine(
        corpus_dir,
        config=config,
        stopwords_path=stopwords_path,
        exemplars_dir=exemplars_dir,
        intent_model_path=intent_model_path,
        embedder=embedder,
        scorer=scorer,
        generator=generator,
    )


def _answer_payload(result) -> dict:
    return {
        "answer": result.answer.text,
        "not_found": result.answer.not_found,
        "intent": result.analysis.intent.value,
        "confidence": result.analysis.confidence,
        "documents": [
            {"doc_id": doc_id, "score": score} for doc_id, score in result.ranked
        ],
    }


@cli.command()
@click.option("--text", required=True)
@click.option("--mode", default="bm25", type=click.Choice(["bm25", "fusion"]))
@click.option("-k", "--top-k", "top_k", default=None, type=int)
@engine_options
@handle_errors
def query(text, mode, top_k, **engine_flags):
    """Answer a single question and print the result as JSON."""
    engine = _load_cli_engine(mode=mode, k=None, **engine_flags)
    result = engine.ask(text, mode=mode, k=top_k)
    click.echo(json.dumps(_answer_payload(result), ensure_ascii=False))


@cli.command()
@click.option("--mode", default="bm25", type=click.Choice(["bm25", "fusion"]))
@engine_options
@handle_errors
def repl(mode, **engine_flags):
    """Interactive loop: read a question, print the answer and its documents."""
    engine = _load_cli_engine(mode=mode, k=None, **engine_flags)
    click.echo("lexirag repl; empty line or EOF exits.")
    while True:
        try:
            line = input("? ").strip()
        except EOFError:
            break
        if not line:
            break
        result = engine.ask(line, mode=mode)
        click.echo(result.answer.text)
        docs = ", ".join(result.answer.supporting_doc_ids)
        click.echo(f"[{result.analysis.intent.value} @ {result.analysis.confidence:.2f}] {docs}")


@cli.group(name="eval")
def eval_group():
    """Retrieval metrics, answer judging and agreement statistics."""


@eval_group.command("retrieval")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--qrels", "qrels_path", required=True, type=click.Path(exists=True))
@click.option("-k", "recall_k", default=10, type=int)
@handle_errors
def eval_retrieval(run_path, qrels_path, recall_k):
    """Print MRR, MAP and Recall@k as three tab-separated numbers."""
    run = read_run(run_path)
    qrels = read_qrels(qrels_path)
    scores = (mrr(run, qrels), map_metric(run, qrels), recall_at_k(run, qrels, recall_k))
    click.echo("\t".join(f"{s:.6f}" for s in scores))


@eval_group.command("answers")
@click.option("--set", "set_path", required=True, type=click.Path(exists=True),
              help="JSONL with question, gold_answer, answer and optional key_values")
@click.option("--judge", "judge_kind", default="exact", type=click.Choice(["exact", "remote"]))
@click.option("--llm-endpoint", default=None)
@click.option("--llm-model", default="")
@click.option("--out", "out_path", default=None, type=click.Path())
@handle_errors
def eval_answers(set_path, judge_kind, llm_endpoint, llm_model, out_path):
    """Score candidate answers against gold answers."""
    records = []
    with open(set_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    if judge_kind == "remote":
        if not llm_endpoint:
            click.echo("error: --llm-endpoint is required with --judge remote", err=True)
            sys.exit(2)
        from .pipeline import HttpChatClient

        client = HttpChatClient(llm_endpoint, llm_model)
        scores = [
            judge(client, r["question"], r["gold_answer"], r["answer"]) for r in records
        ]
    else:
        scores = [
            exact_match_judge(
                r["question"], r["gold_answer"], r["answer"], r.get("key_values", ())
            )
            for r in records
        ]
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            for record, score in zip(records, scores):
                fh.write(f"{record.get('query_id', '')}\t{score}\n")
    mean = sum(scores) / len(scores) if scores else 0.0
    click.echo(f"{mean:.2f}")


@eval_group.command("agreement")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@handle_errors
def eval_agreement(pairs_path):
    """Judge-human agreement statistics over a score-pair TSV."""
    report = agreement(read_score_pairs(pairs_path))
    pearson = "undefined" if report.pearson_r is None else f"{report.pearson_r:.4f}"
    click.echo(f"exact_match_rate\t{report.exact_match_rate:.4f}")
    click.echo(f"within_one_category_rate\t{report.within_one_category_rate:.4f}")
    click.echo(f"mean_signed_diff\t{report.mean_signed_diff:.4f}")
    click.echo(f"mae\t{report.mae:.4f}")
    click.echo(f"pearson_r\t{pearson}")
    click.echo(f"weighted_kappa_quadratic\t{report.weighted_kappa_quadratic:.4f}")


@cli.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", default=None, type=click.Path())
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@click.option("--mode", default=None, type=click.Choice(["bm25", "fusion"]))
@handle_errors
def serve(config_path, corpus_dir, host, port, mode):
    """Run the HTTP service over a built corpus directory."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path, corpus_dir=corpus_dir, host=host, port=port)
    config.validate()
    providers = config.providers
    embedder, scorer, generator = build_providers(
        embed_endpoint=providers.embed_endpoint, embed_model=providers.embed_model,
        embed_dim=providers.embed_dim, embed_file=providers.embed_file,
        rerank_endpoint=providers.rerank_endpoint, rerank_model=providers.rerank_model,
        llm_endpoint=providers.llm_endpoint, llm_model=providers.llm_model,
    )
    pipeline_config = config.pipeline
    if mode:
        from dataclasses import replace

        pipeline_config = replace(pipeline_config, retrieval_mode=RetrievalMode(mode))
    engine = load_engine(
        config.corpus_dir,
        config=pipeline_config,
        stopwords_path=config.stopwords,
        exemplars_dir=config.exemplars_dir,
        intent_model_path=config.intent_model,
        embedder=embedder,
        scorer=scorer,
        generator=generator,
    )
    app = create_app(engine)
    uvicorn.run(app, host=config.host, port=config.port)


def main():
    cli(standalone_mode=True)


if __name__ == "__main__":
    main()
