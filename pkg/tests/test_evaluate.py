import pytest

from sensery.evaluate import SplitSpec, span_prf, split_crowd
from sensery.patterns import LabeledPhrase, Provenance, SenseLabel
from sensery.textcore import BioTag, TaggedSentence, tokenize

B, I, O = BioTag.B, BioTag.I, BioTag.O


def sent(text, tags, sense="audible"):
    return TaggedSentence(tuple(tokenize(text)), tuple(tags), sense=sense)


class TestSpanPrf:
    def test_perfect(self):
        gold = [sent("a b c", [O, B, I])]
        rep = span_prf(gold, [[O, B, I]])
        assert (rep.precision, rep.recall, rep.f1) == (100.0, 100.0, 100.0)

    def test_half_half(self):
        # 2 gold spans; prediction recovers one and invents one
        gold = [sent("a b c d e", [B, O, B, I, O])]
        rep = span_prf(gold, [[B, O, O, O, B]])
        assert rep.precision == 50.0
        assert rep.recall == 50.0
        assert rep.f1 == 50.0

    def test_all_o_prediction(self):
        gold = [sent("a b", [B, O])]
        rep = span_prf(gold, [[O, O]])
        assert (rep.precision, rep.recall, rep.f1) == (0.0, 0.0, 0.0)

    def test_boundary_mismatch_not_correct(self):
        gold = [sent("a b c", [B, I, O])]
        rep = span_prf(gold, [[B, I, I]])
        assert rep.correct_spans == 0

    def test_f1_identity(self):
        gold = [sent("a b c d", [B, O, B, O])]
        rep = span_prf(gold, [[B, O, O, B]])
        p, r = rep.precision, rep.recall
        assert rep.f1 == pytest.approx(2 * p * r / (p + r))

    def test_per_sense_breakdown(self):
        gold = [
            sent("a b", [B, O], "audible"),
            sent("c d", [B, O], "olfactible"),
        ]
        rep = span_prf(gold, [[B, O], [O, O]])
        assert rep.per_sense["audible"].f1 == 100.0
        assert rep.per_sense["olfactible"].f1 == 0.0

    def test_length_mismatch(self):
        gold = [sent("a b", [B, O])]
        with pytest.raises(ValueError):
            span_prf(gold, [[B, O, O]])
        with pytest.raises(ValueError):
            span_prf(gold, [])


def make_accepted(n_per_sense):
    out = []
    for sense in SenseLabel:
        for i in range(n_per_sense):
            out.append(
                LabeledPhrase((f"{sense.value}{i}",), sense, Provenance.CROWD)
            )
    return out


class TestSplitCrowd:
    def test_protocol_shape(self):
        # 1000 accepted-style phrases, 100 test per sense -> 400/100 each
        phrases = make_accepted(500)
        train, test = split_crowd(phrases, SplitSpec(seed=0, test_per_sense=100))
        for sense in SenseLabel:
            assert sum(1 for p in train if p.sense is sense) == 400
            assert sum(1 for p in test if p.sense is sense) == 100
        assert set(train) | set(test) == set(phrases)
        assert set(train) & set(test) == set()

    def test_zero_test(self):
        phrases = make_accepted(5)
        train, test = split_crowd(phrases, SplitSpec(test_per_sense=0))
        assert test == [] and len(train) == 10

    def test_deterministic(self):
        phrases = make_accepted(50)
        spec = SplitSpec(seed=3, test_per_sense=10)
        assert split_crowd(phrases, spec) == split_crowd(phrases, spec)

    def test_shortfall_names_sense(self):
        phrases = [p for p in make_accepted(50) if p.sense is SenseLabel.AUDIBLE]
        phrases += [
            LabeledPhrase(("x",), SenseLabel.OLFACTIBLE, Provenance.CROWD)
        ]
        with pytest.raises(ValueError, match="olfactible"):
            split_crowd(phrases, SplitSpec(test_per_sense=5))
