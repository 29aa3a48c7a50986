"""Mixture labeling: expand the crowd-verified phrase set with pattern
phrases whose embedding similarity clears the threshold alpha, and sweep
alpha to trace the size/accuracy trade-off."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .embeddings import EmbeddingTable, UndefinedVectorError, cosine, phrase_vector
from .patterns import LabeledPhrase, Provenance, SenseLabel, with_provenance


@dataclass(frozen=True)
class MixtureConfig:
    alpha: float
    sense: SenseLabel

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")


# Fixed from the alpha sweep: the F1-optimal thresholds per sense.
DEFAULT_ALPHA = {SenseLabel.AUDIBLE: 0.6, SenseLabel.OLFACTIBLE: 0.4}


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    train_size: int
    precision: float
    recall: float
    f1: float


def shifted_similarity(u, v) -> float:
    """Cosine similarity mapped into [0,1], so that alpha=0 admits every
    phrase with a defined vector and alpha=1 admits only exact-direction
    matches."""
    return (cosine(u, v) + 1.0) / 2.0


def expand(
    crowd: Sequence[LabeledPhrase],
    pattern: Sequence[LabeledPhrase],
    alpha: float,
    table: EmbeddingTable,
) -> list[LabeledPhrase]:
    """crowd plus every pattern phrase whose max shifted similarity to any
    crowd phrase is >= alpha.

    Admitted phrases get provenance `mixture`; pattern phrases duplicating
    a crowd phrase, or with no in-vocabulary token, are dropped.
    """
    if not crowd:
        raise ValueError("crowd set must be non-empty")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0,1], got {alpha}")
    senses = {p.sense for p in crowd} | {p.sense for p in pattern}
    if len(senses) > 1:
        raise ValueError(f"mixed senses in expand: {sorted(s.value for s in senses)}")

    crowd_vecs = []
    for c in crowd:
        try:
            crowd_vecs.append(phrase_vector(c.tokens, table).vector)
        except UndefinedVectorError:
            crowd_vecs.append(None)
    crowd_tokens = {c.tokens for c in crowd}

    out = list(crowd)
    for p in sorted(pattern, key=lambda q: q.tokens):
        if p.tokens in crowd_tokens:
            continue
        try:
            pv = phrase_vector(p.tokens, table).vector
        except UndefinedVectorError:
            continue
        best = max(
            (shifted_similarity(cv, pv) for cv in crowd_vecs if cv is not None),
            default=None,
        )
        if best is None:
            raise ValueError("no crowd phrase has a defined vector")
        if best >= alpha:
            out.append(with_provenance(p, Provenance.MIXTURE))
    return out


def alpha_sweep(
    alphas: Sequence[float],
    crowd: Sequence[LabeledPhrase],
    pattern: Sequence[LabeledPhrase],
    table: EmbeddingTable,
    train_and_eval: Callable[[list[LabeledPhrase]], tuple[float, float, float]],
) -> list[SweepRow]:
    """One row per alpha: expand, hand the set to the training/eval callback,
    record (precision, recall, f1) plus the expanded-set size.

    The callback owns model choice, seeding, and the held-out data; a
    callback failure aborts the sweep naming the alpha it died at.
    """
    rows = []
    for alpha in sorted(alphas):
        expanded = expand(crowd, pattern, alpha, table)
        try:
            p, r, f1 = train_and_eval(expanded)
        except Exception as exc:
            raise RuntimeError(f"sweep failed at alpha={alpha}: {exc}") from exc
        rows.append(
            SweepRow(
                alpha=alpha, train_size=len(expanded), precision=p, recall=r, f1=f1
            )
        )
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "train_size", "precision", "recall", "f1"])
        for row in rows:
            writer.writerow(
                [
                    f"{row.alpha:g}",
                    row.train_size,
                    f"{row.precision:.4f}",
                    f"{row.recall:.4f}",
                    f"{row.f1:.4f}",
                ]
            )
