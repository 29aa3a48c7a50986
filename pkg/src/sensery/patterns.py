"""Pattern-based corpus labeling: scan plain text for "sound of <y>" /
"smell of <y>" triggers and emit frequency-merged labeled phrases."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator

from .textcore import Token, tokenize

MAX_PHRASE_TOKENS = 4
_DETERMINERS = {"a", "an", "the"}


class SenseLabel(str, Enum):
    AUDIBLE = "audible"
    OLFACTIBLE = "olfactible"

    def __str__(self) -> str:
        return self.value


class Provenance(str, Enum):
    PATTERN = "pattern"
    CROWD = "crowd"
    MIXTURE = "mixture"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SensePattern:
    trigger: tuple[str, ...]  # lowercase token sequence, e.g. ("sound", "of")
    sense: SenseLabel

    def __post_init__(self):
        if not self.trigger:
            raise ValueError("pattern trigger must be non-empty")


DEFAULT_PATTERNS = (
    SensePattern(("sound", "of"), SenseLabel.AUDIBLE),
    SensePattern(("smell", "of"), SenseLabel.OLFACTIBLE),
)


@dataclass(frozen=True)
class LabeledPhrase:
    tokens: tuple[str, ...]  # lowercase token strings
    sense: SenseLabel
    provenance: Provenance
    freq: int = 1

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("phrase must be non-empty")
        if self.freq < 1:
            raise ValueError("frequency must be >= 1")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def load_stoplist(path: str | Path | None = None) -> frozenset[str]:
    """Load the phrase-boundary stop list (shipped data file by default)."""
    if path is None:
        text = (
            resources.files("sensery").joinpath("data/stoplist.txt").read_text("utf-8")
        )
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


def _is_punct(tok: Token) -> bool:
    return all(not c.isalnum() for c in tok.surface)


def extract_phrase(
    tokens: list[Token], match_end: int, stoplist: frozenset[str]
) -> tuple[str, ...] | None:
    """Take up to 4 tokens after the trigger as the labeled phrase.

    A leading determiner is stripped and extraction stops before the first
    punctuation token or stop-list word. Returns None when nothing is left.
    """
    i = match_end
    if i < len(tokens) and tokens[i].lower in _DETERMINERS:
        i += 1
    phrase: list[str] = []
    while i < len(tokens) and len(phrase) < MAX_PHRASE_TOKENS:
        tok = tokens[i]
        if _is_punct(tok) or tok.lower in stoplist:
            break
        phrase.append(tok.lower)
        i += 1
    return tuple(phrase) if phrase else None


def scan_corpus(
    lines: Iterable[str | bytes],
    patterns: Iterable[SensePattern] = DEFAULT_PATTERNS,
    stoplist: frozenset[str] | None = None,
) -> tuple[list[LabeledPhrase], int]:
    """Scan a line stream for pattern triggers.

    Identical (phrase, sense) occurrences are merged with summed frequency
    and the result is sorted by (sense, descending frequency, phrase), so
    the output does not depend on scan order. Returns the phrases plus a
    count of undecodable (non-UTF-8) lines that were skipped.
    """
    if stoplist is None:
        stoplist = load_stoplist()
    patterns = list(patterns)
    # phrases must never contain a trigger word, so triggers act as stops too
    stoplist = stoplist | {w for pat in patterns for w in pat.trigger}
    counts: dict[tuple[tuple[str, ...], SenseLabel], int] = {}
    skipped = 0
    for raw in lines:
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                skipped += 1
                continue
        tokens = tokenize(raw)
        lowers = [t.lower for t in tokens]
        for pat in patterns:
            k = len(pat.trigger)
            for i in range(len(tokens) - k + 1):
                if tuple(lowers[i : i + k]) != pat.trigger:
                    continue
                phrase = extract_phrase(tokens, i + k, stoplist)
                if phrase is not None:
                    counts[(phrase, pat.sense)] = counts.get((phrase, pat.sense), 0) + 1
    phrases = [
        LabeledPhrase(tokens=ph, sense=sense, provenance=Provenance.PATTERN, freq=n)
        for (ph, sense), n in counts.items()
    ]
    phrases.sort(key=lambda p: (p.sense.value, -p.freq, p.tokens))
    return phrases, skipped


def merge_phrases(shards: Iterable[Iterable[LabeledPhrase]]) -> list[LabeledPhrase]:
    """Merge independently scanned shards; frequency addition is commutative
    so the result matches a single-pass scan."""
    counts: dict[tuple[tuple[str, ...], SenseLabel, Provenance], int] = {}
    for shard in shards:
        for p in shard:
            key = (p.tokens, p.sense, p.provenance)
            counts[key] = counts.get(key, 0) + p.freq
    merged = [
        LabeledPhrase(tokens=t, sense=s, provenance=pr, freq=n)
        for (t, s, pr), n in counts.items()
    ]
    merged.sort(key=lambda p: (p.sense.value, -p.freq, p.tokens))
    return merged


def write_phrases(phrases: Iterable[LabeledPhrase], out: IO[str] | str | Path) -> None:
    """Write phrases as JSON-lines."""
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8") as fh:
            write_phrases(phrases, fh)
        return
    for p in phrases:
        out.write(
            json.dumps(
                {
                    "phrase": list(p.tokens),
                    "sense": p.sense.value,
                    "provenance": p.provenance.value,
                    "freq": p.freq,
                }
            )
            + "\n"
        )


def read_phrases(path: str | Path) -> list[LabeledPhrase]:
    phrases = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            phrases.append(
                LabeledPhrase(
                    tokens=tuple(obj["phrase"]),
                    sense=SenseLabel(obj["sense"]),
                    provenance=Provenance(obj["provenance"]),
                    freq=obj.get("freq", 1),
                )
            )
    return phrases


def with_provenance(phrase: LabeledPhrase, provenance: Provenance) -> LabeledPhrase:
    return replace(phrase, provenance=provenance)
