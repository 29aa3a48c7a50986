"""Tokenization, the BIO tag codec, span arithmetic, and the CoNLL-style
sentence format shared by every other module."""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence


class ValidationError(ValueError):
    """Raised when a domain invariant is violated (bad spans, bad tag sequences)."""


class ParseError(ValueError):
    """Raised for malformed on-disk data; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


_EDGE_PUNCT = set(string.punctuation)


@dataclass(frozen=True)
class Token:
    """A single token: original surface form plus its case-folded form."""

    surface: str
    pos: str | None = None
    lower: str = field(init=False)

    def __post_init__(self):
        if not self.surface:
            raise ValidationError("token surface must be non-empty")
        object.__setattr__(self, "lower", self.surface.casefold())


class BioTag(str, Enum):
    B = "B"
    I = "I"
    O = "O"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Span:
    """Half-open token range [start, end)."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(f"invalid span ({self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class TaggedSentence:
    """Tokens plus a BIO tag per token; the unit of training and evaluation."""

    tokens: tuple[Token, ...]
    tags: tuple[BioTag, ...]
    sense: str | None = None

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValidationError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags"
            )
        validate_bio(self.tags)

    def spans(self) -> list[Span]:
        return bio_decode(self.tags)

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, then peel ASCII punctuation off token edges.

    Internal punctuation (hyphens, apostrophes) is kept, so "Fresh-cut"
    stays one token while a trailing "!" becomes its own token.
    """
    tokens: list[Token] = []
    for chunk in text.split():
        tokens.extend(Token(s) for s in _split_chunk(chunk))
    return tokens


def _split_chunk(chunk: str) -> list[str]:
    head: list[str] = []
    tail: list[str] = []
    while chunk and chunk[0] in _EDGE_PUNCT:
        head.append(chunk[0])
        chunk = chunk[1:]
    while chunk and chunk[-1] in _EDGE_PUNCT:
        tail.append(chunk[-1])
        chunk = chunk[:-1]
    parts = head
    if chunk:
        parts.append(chunk)
    parts.extend(reversed(tail))
    return parts


def validate_bio(tags: Sequence[BioTag]) -> None:
    """Raise ValidationError unless the tag sequence is BIO-valid."""
    prev = BioTag.O
    for i, tag in enumerate(tags):
        if tag is BioTag.I and prev is BioTag.O:
            raise ValidationError(f"I at position {i} does not continue a span")
        prev = tag


def bio_encode(n: int, spans: Iterable[Span]) -> list[BioTag]:
    """Encode non-overlapping spans over a length-n sentence as BIO tags."""
    tags = [BioTag.O] * n
    for span in sorted(spans):
        if span.end > n:
            raise ValidationError(f"span {span} exceeds sentence length {n}")
        for i in range(span.start, span.end):
            if tags[i] is not BioTag.O:
                raise ValidationError(f"overlapping span at position {i}")
            tags[i] = BioTag.I
        tags[span.start] = BioTag.B
    return tags


def bio_decode(tags: Sequence[BioTag]) -> list[Span]:
    """Decode a BIO tag sequence back into its spans (inverse of bio_encode)."""
    validate_bio(tags)
    spans: list[Span] = []
    start: int | None = None
    for i, tag in enumerate(tags):
        if tag is BioTag.B:
            if start is not None:
                spans.append(Span(start, i))
            start = i
        elif tag is BioTag.O:
            if start is not None:
                spans.append(Span(start, i))
                start = None
    if start is not None:
        spans.append(Span(start, len(tags)))
    return spans


def read_conll(path: str | Path) -> list[TaggedSentence]:
    """Read the TSV sentence format: `surface<TAB>pos<TAB>tag`, blank-line
    separated sentences, pos column `_` when absent."""
    sentences: list[TaggedSentence] = []
    tokens: list[Token] = []
    tags: list[BioTag] = []
    sent_start_line = 1

    def flush(lineno: int) -> None:
        nonlocal tokens, tags
        if not tokens:
            return
        try:
            sentences.append(TaggedSentence(tuple(tokens), tuple(tags)))
        except ValidationError as exc:
            raise ParseError(str(exc), sent_start_line) from exc
        tokens, tags = [], []

    with open(path, encoding="utf-8") as fh:
        lineno = 0
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush(lineno)
                sent_start_line = lineno + 1
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ParseError(f"expected 3 columns, got {len(cols)}", lineno)
            surface, pos, tagstr = cols
            if tagstr not in BioTag._value2member_map_:
                raise ParseError(f"unknown tag {tagstr!r}", lineno)
            if not surface:
                raise ParseError("empty surface form", lineno)
            tokens.append(Token(surface, pos=None if pos == "_" else pos))
            tags.append(BioTag(tagstr))
        flush(lineno + 1)
    return sentences


def write_conll(sentences: Iterable[TaggedSentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            for token, tag in zip(sent.tokens, sent.tags):
                fh.write(f"{token.surface}\t{token.pos or '_'}\t{tag.value}\n")
            fh.write("\n")
