"""Crowd judgment plumbing: task sampling, the response journal, majority
aggregation, and Fleiss's kappa over the yes/no/notsure categories."""

from __future__ import annotations

import json
import random
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

from .patterns import LabeledPhrase, SenseLabel

ANSWERS = ("yes", "no", "notsure")


class IncompleteTaskError(ValueError):
    def __init__(self, task_ids: list[str]):
        self.task_ids = task_ids
        super().__init__(f"tasks with wrong response count: {task_ids}")


class UndefinedAgreementError(ValueError):
    """All responses fell in a single category, so chance agreement is 1."""


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    phrase: LabeledPhrase
    required_annotators: int = 3

    def __post_init__(self):
        if self.required_annotators < 1:
            raise ValueError("need at least one annotator")


@dataclass(frozen=True)
class AnnotationResponse:
    task_id: str
    annotator_id: str
    answer: str
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        if self.answer not in ANSWERS:
            raise ValueError(f"unknown answer {self.answer!r}")


@dataclass(frozen=True)
class Verdict:
    task_id: str
    accepted: bool
    tally: dict[str, int]


def build_tasks(
    phrases: Sequence[LabeledPhrase],
    per_sense: int,
    annotators: int = 3,
    seed: int = 0,
) -> list[AnnotationTask]:
    """Sample `per_sense` phrases per sense, uniformly without replacement.

    Deterministic for a fixed seed; raises if any sense pool is too small.
    """
    rng = random.Random(seed)
    tasks: list[AnnotationTask] = []
    for sense in SenseLabel:
        pool = [p for p in phrases if p.sense is sense]
        if len(pool) < per_sense:
            raise ValueError(
                f"sense {sense.value}: need {per_sense} phrases, "
                f"have {len(pool)} (short by {per_sense - len(pool)})"
            )
        for p in rng.sample(pool, per_sense):
            tasks.append(
                AnnotationTask(
                    task_id=f"{sense.value}-{len(tasks):05d}",
                    phrase=p,
                    required_annotators=annotators,
                )
            )
    return tasks


def aggregate(
    responses: Iterable[AnnotationResponse],
    tasks: Sequence[AnnotationTask],
) -> list[Verdict]:
    """One verdict per task: accepted iff a strict majority answered yes.

    Every task must have exactly its required number of responses.
    """
    by_task: dict[str, list[AnnotationResponse]] = defaultdict(list)
    for r in responses:
        by_task[r.task_id].append(r)
    bad = [
        t.task_id
        for t in tasks
        if len(by_task.get(t.task_id, [])) != t.required_annotators
    ]
    if bad:
        raise IncompleteTaskError(sorted(bad))
    verdicts = []
    for t in tasks:
        tally = Counter(r.answer for r in by_task[t.task_id])
        verdicts.append(
            Verdict(
                task_id=t.task_id,
                accepted=tally["yes"] * 2 > t.required_annotators,
                tally={a: tally.get(a, 0) for a in ANSWERS},
            )
        )
    return verdicts


def majority_yes_rate(
    verdicts: Sequence[Verdict], tasks: Sequence[AnnotationTask], sense: SenseLabel
) -> float:
    """Percentage of accepted verdicts for one sense."""
    sense_ids = {t.task_id for t in tasks if t.phrase.sense is sense}
    subset = [v for v in verdicts if v.task_id in sense_ids]
    if not subset:
        raise ValueError(f"no verdicts for sense {sense.value}")
    return 100.0 * sum(v.accepted for v in subset) / len(subset)


def notsure_count(
    responses: Iterable[AnnotationResponse], tasks: Sequence[AnnotationTask],
    sense: SenseLabel,
) -> int:
    sense_ids = {t.task_id for t in tasks if t.phrase.sense is sense}
    return sum(
        1 for r in responses if r.task_id in sense_ids and r.answer == "notsure"
    )


def fleiss_kappa(matrix: Sequence[Sequence[int]], raters: int) -> float:
    """Fleiss's kappa for a fixed number of raters per item.

    `matrix` is items x categories counts, each row summing to `raters`.
    kappa = (Po - Pe) / (1 - Pe) with Po the mean per-item pairwise
    agreement and Pe the sum of squared category proportions.
    """
    rows = [list(r) for r in matrix]
    if len(rows) < 2:
        raise ValueError("need at least 2 items")
    if raters < 2:
        raise ValueError("need at least 2 raters for pairwise agreement")
    for i, row in enumerate(rows):
        if sum(row) != raters:
            raise ValueError(f"row {i} sums to {sum(row)}, expected {raters}")
        if any(c < 0 for c in row):
            raise ValueError(f"row {i} has a negative count")
    n = len(rows)
    total = n * raters
    p = [sum(col) / total for col in zip(*rows)]
    pe = sum(pc * pc for pc in p)
    if pe >= 1.0:
        raise UndefinedAgreementError("all responses in a single category")
    po = sum(
        (sum(c * c for c in row) - raters) / (raters * (raters - 1)) for row in rows
    ) / n
    return (po - pe) / (1 - pe)


def response_matrix(
    responses: Iterable[AnnotationResponse],
    tasks: Sequence[AnnotationTask],
    sense: SenseLabel | None = None,
    drop_notsure: bool = False,
) -> tuple[list[list[int]], int]:
    """Build the items x categories count matrix for fleiss_kappa.

    Only tasks with a full response set are included (kappa needs a fixed
    rater count). With drop_notsure the matrix has two columns and items
    containing a notsure answer are excluded entirely.
    """
    by_task: dict[str, list[str]] = defaultdict(list)
    for r in responses:
        by_task[r.task_id].append(r.answer)
    cats = ("yes", "no") if drop_notsure else ANSWERS
    rows: list[list[int]] = []
    raters = 0
    for t in tasks:
        if sense is not None and t.phrase.sense is not sense:
            continue
        answers = by_task.get(t.task_id, [])
        if len(answers) != t.required_annotators:
            continue
        if drop_notsure and "notsure" in answers:
            continue
        rows.append([answers.count(c) for c in cats])
        raters = t.required_annotators
    return rows, raters


# --- response journal: append-only JSON-lines, aggregation is a pure fold ---


def write_journal_entry(fh: IO[str], response: AnnotationResponse) -> None:
    fh.write(
        json.dumps(
            {
                "task_id": response.task_id,
                "annotator": response.annotator_id,
                "answer": response.answer,
                "ts": response.timestamp,
            }
        )
        + "\n"
    )
    fh.flush()


def read_journal(path: str | Path) -> list[AnnotationResponse]:
    """Read the journal, keeping the first response per (task, annotator)."""
    seen: set[tuple[str, str]] = set()
    out: list[AnnotationResponse] = []
    p = Path(path)
    if not p.exists():
        return out
    with open(p, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            key = (obj["task_id"], obj["annotator"])
            if key in seen:
                continue
            seen.add(key)
            out.append(
                AnnotationResponse(
                    task_id=obj["task_id"],
                    annotator_id=obj["annotator"],
                    answer=obj["answer"],
                    timestamp=obj.get("ts", 0.0),
                )
            )
    return out
