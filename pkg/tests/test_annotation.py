import itertools
from fractions import Fraction

import pytest

from sensery.annotation import (
    AnnotationResponse,
    AnnotationTask,
    IncompleteTaskError,
    UndefinedAgreementError,
    aggregate,
    build_tasks,
    fleiss_kappa,
    majority_yes_rate,
    notsure_count,
    read_journal,
    response_matrix,
    write_journal_entry,
)
from sensery.patterns import LabeledPhrase, Provenance, SenseLabel


def make_phrases(n_per_sense):
    out = []
    for sense in SenseLabel:
        for i in range(n_per_sense):
            out.append(
                LabeledPhrase((f"{sense.value}{i}",), sense, Provenance.PATTERN)
            )
    return out


def respond(task, answers):
    return [
        AnnotationResponse(task.task_id, f"ann{j}", a, timestamp=float(j))
        for j, a in enumerate(answers)
    ]


class TestBuildTasks:
    def test_full_protocol_shape(self):
        tasks = build_tasks(make_phrases(600), per_sense=500, annotators=3, seed=1)
        assert len(tasks) == 1000
        per_sense = {s: 0 for s in SenseLabel}
        for t in tasks:
            per_sense[t.phrase.sense] += 1
        assert all(v == 500 for v in per_sense.values())

    def test_zero_per_sense(self):
        assert build_tasks(make_phrases(5), per_sense=0) == []

    def test_deterministic(self):
        phrases = make_phrases(50)
        assert build_tasks(phrases, 20, seed=9) == build_tasks(phrases, 20, seed=9)

    def test_shortfall_names_sense(self):
        phrases = [p for p in make_phrases(10) if p.sense is SenseLabel.AUDIBLE]
        phrases += make_phrases(3)
        with pytest.raises(ValueError, match="olfactible"):
            build_tasks(phrases, per_sense=5)

    def test_no_replacement(self):
        tasks = build_tasks(make_phrases(30), per_sense=30)
        assert len({t.phrase.tokens for t in tasks}) == 60


class TestAggregate:
    def test_majority_yes(self):
        (task,) = build_tasks(make_phrases(1), 1)[:1]
        (v,) = aggregate(respond(task, ["yes", "yes", "no"]), [task])
        assert v.accepted and v.tally == {"yes": 2, "no": 1, "notsure": 0}

    def test_notsure_counts_against(self):
        (task,) = build_tasks(make_phrases(1), 1)[:1]
        (v,) = aggregate(respond(task, ["yes", "no", "notsure"]), [task])
        assert not v.accepted

    def test_unanimous(self):
        (task,) = build_tasks(make_phrases(1), 1)[:1]
        (v,) = aggregate(respond(task, ["yes", "yes", "yes"]), [task])
        assert v.accepted

    def test_incomplete_task(self):
        tasks = build_tasks(make_phrases(1), 1)
        responses = respond(tasks[0], ["yes", "yes"])
        with pytest.raises(IncompleteTaskError) as exc:
            aggregate(responses, tasks)
        assert tasks[0].task_id in exc.value.task_ids

    def test_order_invariant(self):
        (task,) = build_tasks(make_phrases(1), 1)[:1]
        rs = respond(task, ["yes", "no", "yes"])
        assert aggregate(rs, [task]) == aggregate(list(reversed(rs)), [task])

    def test_all_27_triples(self):
        # strict-majority definition brute-forced over every response triple
        (task,) = build_tasks(make_phrases(1), 1)[:1]
        for combo in itertools.product(["yes", "no", "notsure"], repeat=3):
            (v,) = aggregate(respond(task, combo), [task])
            assert v.accepted == (combo.count("yes") >= 2)


class TestRates:
    def _verdicts(self, accepted, total, sense=SenseLabel.AUDIBLE):
        phrases = [
            LabeledPhrase((f"p{i}",), sense, Provenance.PATTERN) for i in range(total)
        ]
        tasks = [AnnotationTask(f"t{i}", p) for i, p in enumerate(phrases)]
        responses = []
        for i, t in enumerate(tasks):
            answers = ["yes"] * 3 if i < accepted else ["no"] * 3
            responses += respond(t, answers)
        return aggregate(responses, tasks), tasks

    def test_table_audible_rate(self):
        verdicts, tasks = self._verdicts(367, 500)
        assert majority_yes_rate(verdicts, tasks, SenseLabel.AUDIBLE) == pytest.approx(
            73.4
        )

    def test_table_olfactible_rate(self):
        verdicts, tasks = self._verdicts(448, 500, SenseLabel.OLFACTIBLE)
        assert majority_yes_rate(
            verdicts, tasks, SenseLabel.OLFACTIBLE
        ) == pytest.approx(89.6)

    def test_all_accepted(self):
        verdicts, tasks = self._verdicts(10, 10)
        assert majority_yes_rate(verdicts, tasks, SenseLabel.AUDIBLE) == 100.0

    def test_empty_errors(self):
        verdicts, tasks = self._verdicts(1, 1)
        with pytest.raises(ValueError):
            majority_yes_rate(verdicts, tasks, SenseLabel.OLFACTIBLE)


class TestNotsureCount:
    def test_counts(self):
        phrases = make_phrases(2)
        tasks = build_tasks(phrases, 2)
        responses = []
        for i, t in enumerate(tasks):
            answers = ["notsure", "yes", "no"] if i % 2 == 0 else ["yes"] * 3
            responses += respond(t, answers)
        assert notsure_count(responses, tasks, SenseLabel.AUDIBLE) == 1

    def test_empty(self):
        assert notsure_count([], [], SenseLabel.AUDIBLE) == 0


def symbolic_kappa(rows, k):
    """Exact-arithmetic oracle for the fixed-k formula."""
    n = len(rows)
    total = Fraction(n * k)
    p = [Fraction(sum(col)) / total for col in zip(*rows)]
    pe = sum(pc * pc for pc in p)
    po = (
        sum(Fraction(sum(c * c for c in row) - k, k * (k - 1)) for row in rows)
        / n
    )
    return (po - pe) / (1 - pe)


class TestFleissKappa:
    def test_perfect_agreement_mixed_margins(self):
        assert fleiss_kappa([(3, 0, 0), (0, 3, 0)], 3) == 1.0

    def test_derived_fixture(self):
        rows = [(3, 0, 0), (0, 3, 0), (1, 1, 1)]
        expected = float(symbolic_kappa(rows, 3))
        assert fleiss_kappa(rows, 3) == pytest.approx(expected, abs=1e-12)

    def test_all_one_category_undefined(self):
        with pytest.raises(UndefinedAgreementError):
            fleiss_kappa([(3, 0, 0), (3, 0, 0), (3, 0, 0)], 3)

    def test_unanimous_always_one(self):
        rows = [(3, 0, 0), (0, 0, 3), (3, 0, 0), (0, 3, 0)]
        assert fleiss_kappa(rows, 3) == pytest.approx(1.0, abs=1e-15)

    def test_relabeling_invariant(self):
        rows = [(2, 1, 0), (0, 2, 1), (1, 1, 1), (3, 0, 0)]
        base = fleiss_kappa(rows, 3)
        for perm in itertools.permutations(range(3)):
            permuted = [tuple(r[j] for j in perm) for r in rows]
            assert fleiss_kappa(permuted, 3) == pytest.approx(base, abs=1e-12)

    def test_row_sum_checked(self):
        with pytest.raises(ValueError):
            fleiss_kappa([(3, 0, 0), (1, 1, 0)], 3)

    def test_needs_two_items(self):
        with pytest.raises(ValueError):
            fleiss_kappa([(3, 0, 0)], 3)


def test_response_matrix_drop_notsure():
    phrases = make_phrases(3)
    tasks = build_tasks(phrases, 3)
    responses = []
    per_task = [["yes", "yes", "no"], ["yes", "notsure", "no"], ["no"] * 3] * 2
    for t, answers in zip(tasks, per_task):
        responses += respond(t, answers)
    rows, raters = response_matrix(responses, tasks, drop_notsure=True)
    assert raters == 3
    assert all(len(r) == 2 for r in rows)
    assert len(rows) == 4  # the two notsure items are excluded


def test_journal_roundtrip_first_wins(tmp_path):
    path = tmp_path / "journal.jsonl"
    r1 = AnnotationResponse("t1", "alice", "yes", 1.0)
    r2 = AnnotationResponse("t1", "alice", "no", 2.0)
    r3 = AnnotationResponse("t1", "bob", "notsure", 3.0)
    with open(path, "w", encoding="utf-8") as fh:
        for r in (r1, r2, r3):
            write_journal_entry(fh, r)
    loaded = read_journal(path)
    assert loaded == [r1, r3]


def test_read_missing_journal(tmp_path):
    assert read_journal(tmp_path / "nope.jsonl") == []
