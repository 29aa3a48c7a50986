"""The `sensery` command line: corpus extraction, annotation service,
mixture expansion, sentence building, training, tagging, and evaluation.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 divergence.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import crf as crf_mod
from . import neural as neural_mod
from .annotation import (
    UndefinedAgreementError,
    aggregate,
    build_tasks,
    fleiss_kappa,
    majority_yes_rate,
    notsure_count,
    read_journal,
    response_matrix,
)
from .embeddings import load_embeddings, phrase_vector, pca2
from .evaluate import span_prf
from .mixture import alpha_sweep, expand, write_sweep_csv
from .patterns import SenseLabel, read_phrases, scan_corpus, write_phrases
from .pipeline import PipelineConfig, run_pipeline, split_templates, tag_with, train_tagger
from .sentences import build_sentences, load_templates
from .textcore import ParseError, ValidationError, read_conll, write_conll

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_DIVERGENCE = 4


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (crf_mod.DivergenceError, neural_mod.DivergenceError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DIVERGENCE)
        except (ValidationError, ParseError, ValueError, KeyError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)

    return wrapper


@click.group()
def main():
    """Sense-mention recognition toolkit."""


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@handle_errors
def extract(corpus, out):
    """Scan a plain-text corpus for sense patterns."""
    with open(corpus, encoding="utf-8", errors="replace") as fh:
        phrases, skipped = scan_corpus(fh)
    write_phrases(phrases, out)
    for sense in SenseLabel:
        n = sum(1 for p in phrases if p.sense is sense)
        total = sum(p.freq for p in phrases if p.sense is sense)
        click.echo(f"{sense.value}: {n} distinct phrases, {total} occurrences")
    if skipped:
        click.echo(f"skipped {skipped} undecodable lines", err=True)


@main.group()
def annotate():
    """Crowd annotation service and offline aggregation."""


def _build_tasks_from(phrases_path, per_sense, annotators, seed):
    phrases = read_phrases(phrases_path)
    return build_tasks(phrases, per_sense, annotators, seed=seed)


@annotate.command()
@click.option("--phrases", required=True, type=click.Path(exists=True))
@click.option("--per-sense", default=500, show_default=True)
@click.option("--annotators", default=3, show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--journal", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--static", type=click.Path(exists=True), default=None,
              help="Directory with the web UI to serve at /")
@handle_errors
def serve(phrases, per_sense, annotators, port, journal, seed, static):
    """Host the yes/no/notsure judgment API (and optionally the web UI)."""
    import uvicorn

    from .service import create_app

    tasks = _build_tasks_from(phrases, per_sense, annotators, seed)
    app = create_app(tasks, journal, static_dir=static)
    uvicorn.run(app, host="0.0.0.0", port=port)


@annotate.command("aggregate")
@click.option("--phrases", required=True, type=click.Path(exists=True))
@click.option("--journal", required=True, type=click.Path(exists=True))
@click.option("--per-sense", default=500, show_default=True)
@click.option("--annotators", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--drop-notsure", is_flag=True,
              help="Compute kappa over yes/no only, excluding notsure items")
@handle_errors
def annotate_aggregate(phrases, journal, per_sense, annotators, seed, out, drop_notsure):
    """Fold the response journal into verdicts and agreement stats."""
    tasks = _build_tasks_from(phrases, per_sense, annotators, seed)
    responses = read_journal(journal)
    verdicts = aggregate(responses, tasks)
    Path(out).write_text(
        json.dumps(
            [
                {"task_id": v.task_id, "accepted": v.accepted, "tally": v.tally}
                for v in verdicts
            ],
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    for sense in SenseLabel:
        rate = majority_yes_rate(verdicts, tasks, sense)
        matrix, raters = response_matrix(
            responses, tasks, sense, drop_notsure=drop_notsure
        )
        try:
            kappa = f"{fleiss_kappa(matrix, raters):.4f}"
        except (UndefinedAgreementError, ValueError):
            kappa = "undefined"
        ns = notsure_count(responses, tasks, sense)
        click.echo(
            f"{sense.value}: majority-yes {rate:.1f}%  fleiss-kappa {kappa}  "
            f"notsure {ns}"
        )


@main.command("expand")
@click.option("--crowd", required=True, type=click.Path(exists=True))
@click.option("--pattern", required=True, type=click.Path(exists=True))
@click.option("--alpha", required=True, type=float)
@click.option("--embeddings", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@handle_errors
def expand_cmd(crowd, pattern, alpha, embeddings, out):
    """Expand the crowd set with similar pattern phrases."""
    table = load_embeddings(embeddings)
    crowd_phrases = read_phrases(crowd)
    pattern_phrases = read_phrases(pattern)
    results = []
    for sense in SenseLabel:
        c = [p for p in crowd_phrases if p.sense is sense]
        p = [q for q in pattern_phrases if q.sense is sense]
        if c:
            results.extend(expand(c, p, alpha, table))
    write_phrases(results, out)
    click.echo(f"{len(results)} phrases at alpha={alpha:g}")


def _parse_alphas(spec: str) -> list[float]:
    if ":" in spec:
        lo, hi, step = (float(x) for x in spec.split(":"))
        out = []
        a = lo
        while a <= hi + 1e-9:
            out.append(round(a, 10))
            a += step
        return out
    return [float(x) for x in spec.split(",")]


@main.command()
@click.option("--alphas", default="0:1:0.1", show_default=True,
              help="lo:hi:step or a comma list")
@click.option("--crowd", required=True, type=click.Path(exists=True))
@click.option("--pattern", required=True, type=click.Path(exists=True))
@click.option("--test", "test_phrases", required=True, type=click.Path(exists=True),
              help="Held-out phrases used to build the fixed eval sentences")
@click.option("--embeddings", required=True, type=click.Path(exists=True))
@click.option("--model", "model_kind", type=click.Choice(["crf", "lstm"]),
              default="crf", show_default=True)
@click.option("--variant", default="or,char", show_default=True)
@click.option("--epochs", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--templates", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@handle_errors
def sweep(alphas, crowd, pattern, test_phrases, embeddings, model_kind, variant,
          epochs, seed, templates, out):
    """Sweep alpha, retraining and scoring a model per point."""
    table = load_embeddings(embeddings)
    crowd_phrases = read_phrases(crowd)
    pattern_pool = read_phrases(pattern)
    held_out = read_phrases(test_phrases)
    train_templates, test_templates = split_templates(load_templates(templates))
    cfg = PipelineConfig(
        corpus="", embeddings=embeddings, journal="", out_dir="",
        model=model_kind, variant=variant, seed=seed, epochs=epochs,
    )
    test_sents = build_sentences(held_out, test_templates, seed=seed + 1)

    def train_and_eval(expanded):
        train_sents = build_sentences(expanded, train_templates, seed=seed)
        model = train_tagger(train_sents, cfg, table)
        pred = tag_with(model, test_sents, cfg)
        rep = span_prf(test_sents, pred)
        return rep.precision, rep.recall, rep.f1

    all_rows = []
    senses = sorted({p.sense for p in crowd_phrases}, key=lambda s: s.value)
    for sense in senses:
        c = [p for p in crowd_phrases if p.sense is sense]
        p = [q for q in pattern_pool if q.sense is sense]
        rows = alpha_sweep(_parse_alphas(alphas), c, p, table, train_and_eval)
        all_rows.extend(rows)
    write_sweep_csv(all_rows, out)
    click.echo(f"wrote {len(all_rows)} sweep rows to {out}")


@main.command("build-sentences")
@click.option("--phrases", required=True, type=click.Path(exists=True))
@click.option("--templates", type=click.Path(exists=True), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@handle_errors
def build_sentences_cmd(phrases, templates, seed, out):
    """Instantiate labeled phrases into BIO-tagged CoNLL sentences."""
    sents = build_sentences(read_phrases(phrases), load_templates(templates), seed=seed)
    write_conll(sents, out)
    click.echo(f"wrote {len(sents)} sentences")


@main.command()
@click.option("--model", "model_kind", type=click.Choice(["crf", "lstm"]),
              default="crf", show_default=True)
@click.option("--variant", default="or,char", show_default=True)
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", type=click.Path(exists=True), default=None)
@click.option("--epochs", default=20, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@handle_errors
def train(model_kind, variant, train_path, embeddings, epochs, out, seed):
    """Train a tagger on a CoNLL file."""
    data = read_conll(train_path)
    table = load_embeddings(embeddings) if embeddings else None
    cfg = PipelineConfig(
        corpus="", embeddings=embeddings or "", journal="", out_dir="",
        model=model_kind, variant=variant, seed=seed, epochs=epochs,
    )
    model = train_tagger(data, cfg, table)
    if model_kind == "crf":
        crf_mod.save_crf(model, out)
    else:
        neural_mod.save_neural(model, out)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--variant", default="or,char", show_default=True)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@handle_errors
def tag(model_path, variant, in_path, out):
    """Tag a CoNLL file with a saved model (gold tags in the input are ignored)."""
    data = read_conll(in_path)
    header = json.loads(Path(model_path).read_text(encoding="utf-8"))
    tagged = []
    if header.get("format") == "sensery-crf":
        model = crf_mod.load_crf(model_path)
        pred = [crf_mod.viterbi(model, s.tokens) for s in data]
    else:
        model = neural_mod.load_neural(model_path)
        pred = [neural_mod.tag_sentence(model, s.tokens, variant) for s in data]
    for sent, tags in zip(data, pred):
        tagged.append(
            type(sent)(tokens=sent.tokens, tags=tuple(tags), sense=sent.sense)
        )
    write_conll(tagged, out)
    click.echo(f"tagged {len(tagged)} sentences")


@main.command("eval")
@click.option("--gold", required=True, type=click.Path(exists=True))
@click.option("--pred", required=True, type=click.Path(exists=True))
@handle_errors
def eval_cmd(gold, pred):
    """Span-level exact-match P/R/F1 between two CoNLL files."""
    gold_sents = read_conll(gold)
    pred_sents = read_conll(pred)
    report = span_prf(gold_sents, [s.tags for s in pred_sents])
    click.echo(report.format())


@main.command()
@click.option("--phrases", required=True, type=click.Path(exists=True))
@click.option("--embeddings", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@handle_errors
def pca(phrases, embeddings, out):
    """2-D PCA projection of phrase vectors, as CSV."""
    from .embeddings import UndefinedVectorError

    table = load_embeddings(embeddings)
    rows = []
    vectors = []
    for p in read_phrases(phrases):
        try:
            vectors.append(phrase_vector(p.tokens, table).vector)
        except UndefinedVectorError:
            continue
        rows.append(p)
    points = pca2(vectors)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("phrase,sense,x,y\n")
        for p, (x, y) in zip(rows, points):
            fh.write(f"{' '.join(p.tokens)},{p.sense.value},{x:.6f},{y:.6f}\n")
    click.echo(f"wrote {len(rows)} points")


@main.command("run")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--embeddings", required=True, type=click.Path(exists=True))
@click.option("--journal", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--model", "model_kind", type=click.Choice(["crf", "lstm"]),
              default="crf", show_default=True)
@click.option("--variant", default="or,char", show_default=True)
@click.option("--per-sense", default=500, show_default=True)
@click.option("--test-per-sense", default=100, show_default=True)
@click.option("--alpha-audible", default=0.6, show_default=True)
@click.option("--alpha-olfactible", default=0.4, show_default=True)
@click.option("--epochs", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--templates", type=click.Path(exists=True), default=None)
@handle_errors
def run(corpus, embeddings, journal, out_dir, model_kind, variant, per_sense,
        test_per_sense, alpha_audible, alpha_olfactible, epochs, seed, templates):
    """Run the whole pipeline end to end."""
    cfg = PipelineConfig(
        corpus=corpus,
        embeddings=embeddings,
        journal=journal,
        out_dir=out_dir,
        model=model_kind,
        variant=variant,
        per_sense=per_sense,
        test_per_sense=test_per_sense,
        alpha={"audible": alpha_audible, "olfactible": alpha_olfactible},
        seed=seed,
        epochs=epochs,
        templates=templates,
    )
    report = run_pipeline(cfg)
    click.echo(report.format())


if __name__ == "__main__":
    main()
