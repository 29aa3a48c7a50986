import pytest

from sensery.patterns import LabeledPhrase, Provenance, SenseLabel
from sensery.sentences import (
    CarrierTemplate,
    build_sentences,
    load_templates,
    parse_template,
)
from sensery.textcore import BioTag, Span, TaggedSentence, Token, tokenize

B, I, O = BioTag.B, BioTag.I, BioTag.O


def phrase(words, sense=SenseLabel.OLFACTIBLE):
    return LabeledPhrase(tuple(words.split()), sense, Provenance.CROWD)


def test_parse_template():
    t = parse_template("i noticed the smell of <y> today .")
    assert t.prefix == ("i", "noticed", "the", "smell", "of")
    assert t.suffix == ("today", ".")


def test_parse_requires_single_slot():
    with pytest.raises(ValueError):
        parse_template("no slot here")
    with pytest.raises(ValueError):
        parse_template("<y> twice <y>")


def test_instantiate_tags():
    t = parse_template("i noticed the smell of <y> today .")
    sent = t.instantiate(phrase("fresh paint"))
    assert [tok.surface for tok in sent.tokens] == [
        "i", "noticed", "the", "smell", "of", "fresh", "paint", "today", ".",
    ]
    assert list(sent.tags) == [O, O, O, O, O, B, I, O, O]
    assert sent.sense == "olfactible"


def test_single_token_phrase_one_b():
    t = parse_template("we heard <y> .")
    sent = t.instantiate(phrase("snoring", SenseLabel.AUDIBLE))
    assert list(sent.tags).count(B) == 1
    assert list(sent.tags).count(I) == 0


def test_default_templates_load():
    templates = load_templates()
    assert len(templates) >= 4
    assert all(isinstance(t, CarrierTemplate) for t in templates)


class TestBuildSentences:
    def test_one_per_phrase(self):
        phrases = [phrase(f"thing{i}") for i in range(7)]
        out = build_sentences(phrases, load_templates(), seed=3)
        assert len(out) == len(phrases)

    def test_every_sentence_contains_its_phrase(self):
        phrases = [phrase(f"odd smelly thing{i}") for i in range(5)]
        out = build_sentences(phrases, load_templates(), seed=1)
        for p, sent in zip(phrases, out):
            (span,) = sent.spans()
            assert tuple(t.lower for t in sent.tokens[span.start:span.end]) == p.tokens

    def test_deterministic(self):
        phrases = [phrase(f"x{i}") for i in range(9)]
        a = build_sentences(phrases, load_templates(), seed=5)
        b = build_sentences(phrases, load_templates(), seed=5)
        assert a == b

    def test_needs_templates(self):
        with pytest.raises(ValueError):
            build_sentences([phrase("x")], [])

    def test_per_phrase_augmentation(self):
        out = build_sentences([phrase("x")], load_templates(), per_phrase=3)
        assert len(out) == 3

    def test_corpus_sentence_preferred(self):
        corpus = [
            TaggedSentence(
                tuple(tokenize("the fresh paint dried slowly")),
                (O, O, O, O, O),
            )
        ]
        (sent,) = build_sentences(
            [phrase("fresh paint")], load_templates(), corpus_sentences=corpus
        )
        assert [t.surface for t in sent.tokens] == [
            "the", "fresh", "paint", "dried", "slowly",
        ]
        assert sent.spans() == [Span(1, 3)]

    def test_corpus_miss_falls_back_to_template(self):
        corpus = [
            TaggedSentence(tuple(tokenize("nothing relevant here")), (O, O, O))
        ]
        (sent,) = build_sentences(
            [phrase("fresh paint")], load_templates(), corpus_sentences=corpus
        )
        assert len(sent) > 3
