"""Turn labeled phrases into BIO-tagged training sentences by instantiating
carrier templates (or, when a corpus is supplied, by locating the phrase in
real sentences)."""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .patterns import LabeledPhrase
from .textcore import BioTag, Span, TaggedSentence, Token, bio_encode

SLOT = "<y>"


@dataclass(frozen=True)
class CarrierTemplate:
    prefix: tuple[str, ...]
    suffix: tuple[str, ...]

    def instantiate(self, phrase: LabeledPhrase) -> TaggedSentence:
        tokens = [Token(w) for w in self.prefix]
        start = len(tokens)
        tokens.extend(Token(w) for w in phrase.tokens)
        end = len(tokens)
        tokens.extend(Token(w) for w in self.suffix)
        tags = bio_encode(len(tokens), [Span(start, end)])
        return TaggedSentence(tuple(tokens), tuple(tags), sense=phrase.sense.value)


def parse_template(line: str) -> CarrierTemplate:
    words = line.split()
    if words.count(SLOT) != 1:
        raise ValueError(f"template must contain exactly one {SLOT}: {line!r}")
    i = words.index(SLOT)
    return CarrierTemplate(prefix=tuple(words[:i]), suffix=tuple(words[i + 1 :]))


def load_templates(path: str | Path | None = None) -> list[CarrierTemplate]:
    if path is None:
        text = (
            resources.files("sensery").joinpath("data/templates.txt").read_text("utf-8")
        )
    else:
        text = Path(path).read_text("utf-8")
    templates = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            templates.append(parse_template(line))
    return templates


def _find_subsequence(haystack: Sequence[str], needle: Sequence[str]) -> int | None:
    n = len(needle)
    for i in range(len(haystack) - n + 1):
        if tuple(haystack[i : i + n]) == tuple(needle):
            return i
    return None


def build_sentences(
    phrases: Sequence[LabeledPhrase],
    templates: Sequence[CarrierTemplate],
    corpus_sentences: Sequence[TaggedSentence] | None = None,
    seed: int = 0,
    per_phrase: int = 1,
) -> list[TaggedSentence]:
    """One BIO-tagged sentence per phrase (per_phrase for augmentation).

    Templates are assigned round-robin after a seeded shuffle. When corpus
    sentences are given, a real sentence containing the phrase as an exact
    token subsequence is used preferentially, with the match span tagged.
    """
    if not templates:
        raise ValueError("need at least one template")
    rng = random.Random(seed)
    order = list(templates)
    rng.shuffle(order)
    out: list[TaggedSentence] = []
    t = 0
    for phrase in phrases:
        for _ in range(per_phrase):
            sent = None
            if corpus_sentences is not None:
                sent = _from_corpus(phrase, corpus_sentences)
            if sent is None:
                sent = order[t % len(order)].instantiate(phrase)
                t += 1
            out.append(sent)
    return out


def _from_corpus(
    phrase: LabeledPhrase, corpus: Sequence[TaggedSentence]
) -> TaggedSentence | None:
    for cs in corpus:
        lowers = [tok.lower for tok in cs.tokens]
        i = _find_subsequence(lowers, phrase.tokens)
        if i is not None:
            tags = bio_encode(len(cs.tokens), [Span(i, i + len(phrase.tokens))])
            return TaggedSentence(cs.tokens, tuple(tags), sense=phrase.sense.value)
    return None
