import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from sensery.cli import main, _parse_alphas
from sensery.patterns import (
    LabeledPhrase,
    Provenance,
    SenseLabel,
    write_phrases,
)
from synth import generate_world


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    return generate_world(tmp_path_factory.mktemp("world"), seed=0, per_sense=20)


@pytest.fixture()
def runner():
    return CliRunner()


class TestParseAlphas:
    def test_range(self):
        assert _parse_alphas("0:1:0.5") == [0.0, 0.5, 1.0]

    def test_range_hits_endpoint(self):
        grid = _parse_alphas("0:1:0.1")
        assert len(grid) == 11
        assert grid[-1] == 1.0

    def test_comma_list(self):
        assert _parse_alphas("0.3,0.7") == [0.3, 0.7]


def test_extract_writes_phrases(world, runner, tmp_path):
    out = tmp_path / "phrases.jsonl"
    res = runner.invoke(main, ["extract", "--corpus", world.corpus, "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert "audible:" in res.output and "olfactible:" in res.output
    assert out.exists() and out.read_text().strip()


def test_extract_missing_corpus_exit_code(runner, tmp_path):
    res = runner.invoke(
        main, ["extract", "--corpus", str(tmp_path / "no.txt"), "--out", "x"]
    )
    assert res.exit_code == 2  # click path validation


def test_aggregate_prints_per_sense_stats(world, runner, tmp_path):
    phrases = tmp_path / "phrases.jsonl"
    runner.invoke(main, ["extract", "--corpus", world.corpus, "--out", str(phrases)])
    out = tmp_path / "verdicts.json"
    res = runner.invoke(
        main,
        [
            "annotate", "aggregate",
            "--phrases", str(phrases),
            "--journal", world.journal,
            "--per-sense", "20",
            "--out", str(out),
        ],
    )
    assert res.exit_code == 0, res.output
    for sense in ("audible", "olfactible"):
        assert f"{sense}: majority-yes" in res.output
    verdicts = json.loads(out.read_text())
    assert len(verdicts) == 40


def test_expand_admits_similar_phrases(world, runner, tmp_path):
    crowd = tmp_path / "crowd.jsonl"
    pattern = tmp_path / "pattern.jsonl"
    sense = SenseLabel.AUDIBLE
    vocab = sorted(world.sense_vocab["audible"])
    write_phrases(
        [LabeledPhrase((vocab[0],), sense, Provenance.CROWD)], crowd
    )
    write_phrases(
        [
            LabeledPhrase((vocab[1],), sense, Provenance.PATTERN),
            LabeledPhrase((sorted(world.noise_vocab)[0],), sense, Provenance.PATTERN),
        ],
        pattern,
    )
    out = tmp_path / "expanded.jsonl"
    res = runner.invoke(
        main,
        [
            "expand",
            "--crowd", str(crowd),
            "--pattern", str(pattern),
            "--alpha", "0.8",
            "--embeddings", world.embeddings,
            "--out", str(out),
        ],
    )
    assert res.exit_code == 0, res.output
    admitted = {tuple(json.loads(l)["phrase"]) for l in out.read_text().splitlines()}
    assert (vocab[0],) in admitted and (vocab[1],) in admitted
    assert (sorted(world.noise_vocab)[0],) not in admitted


def test_train_tag_eval_round_trip(world, runner, tmp_path):
    phrases = tmp_path / "phrases.jsonl"
    sense = SenseLabel.AUDIBLE
    write_phrases(
        [
            LabeledPhrase(p, sense, Provenance.CROWD)
            for p in world.real_phrases["audible"][:12]
        ],
        phrases,
    )
    conll = tmp_path / "train.conll"
    res = runner.invoke(
        main,
        [
            "build-sentences",
            "--phrases", str(phrases),
            "--templates", world.templates,
            "--out", str(conll),
        ],
    )
    assert res.exit_code == 0, res.output

    model = tmp_path / "model.json"
    res = runner.invoke(
        main,
        ["train", "--model", "crf", "--train", str(conll),
         "--epochs", "15", "--out", str(model)],
    )
    assert res.exit_code == 0, res.output

    tagged = tmp_path / "tagged.conll"
    res = runner.invoke(
        main,
        ["tag", "--model", str(model), "--in", str(conll), "--out", str(tagged)],
    )
    assert res.exit_code == 0, res.output

    res = runner.invoke(
        main, ["eval", "--gold", str(conll), "--pred", str(tagged)]
    )
    assert res.exit_code == 0, res.output
    assert "F1" in res.output and "100.00" in res.output


def test_train_rejects_bad_conll(runner, tmp_path):
    bad = tmp_path / "bad.conll"
    bad.write_text("word\t_\tQ\n\n", encoding="utf-8")
    res = runner.invoke(
        main, ["train", "--model", "crf", "--train", str(bad), "--out", "m.json"]
    )
    assert res.exit_code == 2


def test_pca_writes_csv(world, runner, tmp_path):
    phrases = tmp_path / "phrases.jsonl"
    rows = [
        LabeledPhrase(p, SenseLabel.AUDIBLE, Provenance.CROWD)
        for p in world.real_phrases["audible"][:5]
    ] + [
        LabeledPhrase(p, SenseLabel.OLFACTIBLE, Provenance.CROWD)
        for p in world.real_phrases["olfactible"][:5]
    ]
    write_phrases(rows, phrases)
    out = tmp_path / "points.csv"
    res = runner.invoke(
        main,
        ["pca", "--phrases", str(phrases), "--embeddings", world.embeddings,
         "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    lines = out.read_text().splitlines()
    assert lines[0] == "phrase,sense,x,y"
    assert len(lines) == 11


def test_run_command_end_to_end(world, runner, tmp_path):
    out_dir = tmp_path / "run"
    res = runner.invoke(
        main,
        [
            "run",
            "--corpus", world.corpus,
            "--embeddings", world.embeddings,
            "--journal", world.journal,
            "--out-dir", str(out_dir),
            "--per-sense", "20",
            "--test-per-sense", "10",
            "--alpha-audible", "0.6",
            "--alpha-olfactible", "0.6",
            "--epochs", "15",
            "--templates", world.templates,
        ],
    )
    assert res.exit_code == 0, res.output
    assert (out_dir / "report.json").exists()
    assert "F1" in res.output
