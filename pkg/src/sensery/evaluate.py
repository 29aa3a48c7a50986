"""Span-level precision/recall/F1 scoring and the crowd train/test split."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .patterns import LabeledPhrase, SenseLabel
from .textcore import BioTag, TaggedSentence, bio_decode


@dataclass(frozen=True)
class EvalReport:
    precision: float  # percentages
    recall: float
    f1: float
    gold_spans: int
    predicted_spans: int
    correct_spans: int
    per_sense: dict = field(default_factory=dict)

    def format(self) -> str:
        lines = [
            f"P={self.precision:.2f} R={self.recall:.2f} F1={self.f1:.2f} "
            f"(gold={self.gold_spans} pred={self.predicted_spans} "
            f"correct={self.correct_spans})"
        ]
        for sense, rep in sorted(self.per_sense.items()):
            lines.append(
                f"  {sense}: P={rep.precision:.2f} R={rep.recall:.2f} "
                f"F1={rep.f1:.2f}"
            )
        return "\n".join(lines)


def _prf(correct: int, predicted: int, gold: int) -> tuple[float, float, float]:
    p = 100.0 * correct / predicted if predicted else 0.0
    r = 100.0 * correct / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def span_prf(
    gold: Sequence[TaggedSentence], pred: Sequence[Sequence[BioTag]]
) -> EvalReport:
    """Exact-match span scoring: a predicted span counts iff its (sentence,
    start, end) matches a gold span."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predictions")
    totals: dict[str | None, list[int]] = {}
    for sent, tags in zip(gold, pred):
        if len(sent) != len(tags):
            raise ValueError(
                f"sentence length {len(sent)} vs prediction length {len(tags)}"
            )
        g = set((s.start, s.end) for s in sent.spans())
        p = set((s.start, s.end) for s in bio_decode(list(tags)))
        counts = totals.setdefault(sent.sense, [0, 0, 0])
        counts[0] += len(g & p)
        counts[1] += len(p)
        counts[2] += len(g)
    correct = sum(c for c, _, _ in totals.values())
    predicted = sum(p for _, p, _ in totals.values())
    gold_n = sum(g for _, _, g in totals.values())
    per_sense = {}
    for sense, (c, p, g) in totals.items():
        if sense is None:
            continue
        sp, sr, sf = _prf(c, p, g)
        per_sense[sense] = EvalReport(sp, sr, sf, g, p, c)
    p_, r_, f_ = _prf(correct, predicted, gold_n)
    return EvalReport(p_, r_, f_, gold_n, predicted, correct, per_sense)


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    test_per_sense: int = 100

    def __post_init__(self):
        if self.test_per_sense < 0:
            raise ValueError("test_per_sense must be >= 0")


def split_crowd(
    phrases: Sequence[LabeledPhrase], spec: SplitSpec
) -> tuple[list[LabeledPhrase], list[LabeledPhrase]]:
    """Seeded per-sense test sample; remainder is train. Disjoint, covers
    the input, deterministic for a fixed seed."""
    rng = random.Random(spec.seed)
    train: list[LabeledPhrase] = []
    test: list[LabeledPhrase] = []
    for sense in SenseLabel:
        pool = [p for p in phrases if p.sense is sense]
        if not pool:
            continue
        if len(pool) < spec.test_per_sense:
            raise ValueError(
                f"sense {sense.value}: need {spec.test_per_sense} phrases "
                f"for the test split, have {len(pool)}"
            )
        picked = set(rng.sample(range(len(pool)), spec.test_per_sense))
        for i, p in enumerate(pool):
            (test if i in picked else train).append(p)
    return train, test
