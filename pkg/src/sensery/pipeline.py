"""End-to-end orchestration: extract -> aggregate -> split -> expand ->
build sentences -> train -> evaluate, with every intermediate artifact
written to a run directory."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import crf as crf_mod
from . import neural as neural_mod
from .annotation import aggregate, build_tasks, read_journal
from .embeddings import EmbeddingTable, load_embeddings
from .evaluate import EvalReport, SplitSpec, span_prf, split_crowd
from .mixture import expand
from .patterns import (
    LabeledPhrase,
    Provenance,
    SenseLabel,
    read_phrases,
    scan_corpus,
    with_provenance,
    write_phrases,
)
from .sentences import CarrierTemplate, build_sentences, load_templates
from .textcore import TaggedSentence, write_conll


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")


@dataclass
class PipelineConfig:
    corpus: str
    embeddings: str
    journal: str
    out_dir: str
    model: str = "crf"  # "crf" | "lstm"
    variant: str = "or+char"
    per_sense: int = 500
    annotators: int = 3
    test_per_sense: int = 100
    alpha: dict[str, float] = field(
        default_factory=lambda: {"audible": 0.6, "olfactible": 0.4}
    )
    seed: int = 0
    epochs: int = 20
    neural_window_hidden: int = 100
    neural_char_hidden: int = 25
    neural_char_dim: int = 25
    templates: str | None = None


def split_templates(
    templates: Sequence[CarrierTemplate],
) -> tuple[list[CarrierTemplate], list[CarrierTemplate]]:
    """Disjoint train/test template pools (even/odd), so test sentences never
    reuse a training carrier."""
    train = [t for i, t in enumerate(templates) if i % 2 == 0]
    test = [t for i, t in enumerate(templates) if i % 2 == 1]
    if not train or not test:
        raise ValueError("need at least 2 templates to split train/test pools")
    return train, test


def train_tagger(
    sentences: Sequence[TaggedSentence],
    cfg: PipelineConfig,
    table: EmbeddingTable | None,
):
    if cfg.model == "crf":
        return crf_mod.train_crf(
            sentences,
            crf_mod.CrfTrainConfig(epochs=cfg.epochs, seed=cfg.seed),
        )
    if cfg.model == "lstm":
        ncfg = neural_mod.NeuralConfig(
            word_dim=table.dim if table is not None else 50,
            window_hidden=cfg.neural_window_hidden,
            char_dim=cfg.neural_char_dim,
            char_hidden=cfg.neural_char_hidden,
        )
        model = neural_mod.build_model(
            sentences, ncfg, pretrained=table, seed=cfg.seed
        )
        return neural_mod.train(
            model,
            sentences,
            neural_mod.TrainConfig(
                epochs=cfg.epochs, seed=cfg.seed, variant=cfg.variant
            ),
        )
    raise ValueError(f"unknown model {cfg.model!r}")


def tag_with(model, sentences: Sequence[TaggedSentence], cfg: PipelineConfig):
    if cfg.model == "crf":
        return [crf_mod.viterbi(model, s.tokens) for s in sentences]
    return [neural_mod.tag_sentence(model, s.tokens, cfg.variant) for s in sentences]


def save_tagger(model, path: Path, cfg: PipelineConfig) -> None:
    if cfg.model == "crf":
        crf_mod.save_crf(model, path)
    else:
        neural_mod.save_neural(model, path)


def report_to_json(report: EvalReport) -> str:
    obj = {
        "precision": f"{report.precision:.2f}",
        "recall": f"{report.recall:.2f}",
        "f1": f"{report.f1:.2f}",
        "gold_spans": report.gold_spans,
        "predicted_spans": report.predicted_spans,
        "correct_spans": report.correct_spans,
        "per_sense": {
            sense: {
                "precision": f"{r.precision:.2f}",
                "recall": f"{r.recall:.2f}",
                "f1": f"{r.f1:.2f}",
                "gold_spans": r.gold_spans,
                "predicted_spans": r.predicted_spans,
                "correct_spans": r.correct_spans,
            }
            for sense, r in sorted(report.per_sense.items())
        },
    }
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    """Run the full protocol; artifacts land in cfg.out_dir. Any stage error
    aborts with the stage name, keeping partial artifacts for debugging."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(asdict(cfg), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    def stage(name: str, fn):
        try:
            return fn()
        except Exception as exc:  # surfaced with the stage name attached
            raise StageError(name, exc) from exc

    def _extract():
        with open(cfg.corpus, encoding="utf-8", errors="replace") as fh:
            phrases, _ = scan_corpus(fh)
        write_phrases(phrases, out / "phrases.jsonl")
        return phrases

    pattern_phrases = stage("extract", _extract)
    table = stage("embeddings", lambda: load_embeddings(cfg.embeddings))

    def _annotate():
        tasks = build_tasks(
            pattern_phrases, cfg.per_sense, cfg.annotators, seed=cfg.seed
        )
        responses = read_journal(cfg.journal)
        verdicts = aggregate(responses, tasks)
        by_id = {t.task_id: t for t in tasks}
        accepted = [
            with_provenance(by_id[v.task_id].phrase, Provenance.CROWD)
            for v in verdicts
            if v.accepted
        ]
        rejected_tokens = {
            (by_id[v.task_id].phrase.tokens, by_id[v.task_id].phrase.sense)
            for v in verdicts
            if not v.accepted
        }
        (out / "verdicts.json").write_text(
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
        return accepted, rejected_tokens

    accepted, rejected = stage("annotate", _annotate)

    def _split():
        return split_crowd(
            accepted, SplitSpec(seed=cfg.seed, test_per_sense=cfg.test_per_sense)
        )

    crowd_train, crowd_test = stage("split", _split)

    templates = stage(
        "templates", lambda: load_templates(cfg.templates)
    )
    train_templates, test_templates = split_templates(templates)

    report_gold: list[TaggedSentence] = []
    report_pred = []
    for sense in SenseLabel:
        sense_train = [p for p in crowd_train if p.sense is sense]
        sense_test = [p for p in crowd_test if p.sense is sense]
        if not sense_train or not sense_test:
            continue
        alpha = cfg.alpha[sense.value]
        # crowd-rejected phrases are known negatives, and held-out test
        # phrases must not leak back in through the pattern pool
        held_out = {(p.tokens, p.sense) for p in crowd_test}
        pool = [
            p
            for p in pattern_phrases
            if p.sense is sense
            and (p.tokens, p.sense) not in rejected
            and (p.tokens, p.sense) not in held_out
        ]
        expanded = stage(
            f"expand-{sense.value}",
            lambda: expand(sense_train, pool, alpha, table),
        )
        write_phrases(expanded, out / f"expanded-{sense.value}.jsonl")
        train_sents = stage(
            f"build-{sense.value}",
            lambda: build_sentences(expanded, train_templates, seed=cfg.seed),
        )
        test_sents = stage(
            f"build-test-{sense.value}",
            lambda: build_sentences(sense_test, test_templates, seed=cfg.seed + 1),
        )
        write_conll(train_sents, out / f"train-{sense.value}.conll")
        write_conll(test_sents, out / f"test-{sense.value}.conll")
        model = stage(
            f"train-{sense.value}", lambda: train_tagger(train_sents, cfg, table)
        )
        save_tagger(model, out / f"model-{sense.value}.json", cfg)
        pred = stage(
            f"tag-{sense.value}", lambda: tag_with(model, test_sents, cfg)
        )
        report_gold.extend(test_sents)
        report_pred.extend(pred)

    report = stage("evaluate", lambda: span_prf(report_gold, report_pred))
    (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
    return report
