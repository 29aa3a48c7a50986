"""Tiny rule-based POS fallback (closed-class lexicon + suffix rules) for
input that carries no POS column. Coarse tags are all the CRF features need."""

from __future__ import annotations

from .textcore import Token

_LEXICON = {
    "DT": {"a", "an", "the", "this", "that", "these", "those", "some", "any",
           "no", "every", "each"},
    "IN": {"in", "on", "at", "by", "to", "of", "from", "with", "into", "over",
           "under", "through", "during", "before", "after", "above", "below",
           "between", "about", "around", "near", "for", "against", "without"},
    "PRP": {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her",
            "us", "them", "my", "your", "his", "its", "our", "their"},
    "CC": {"and", "or", "but", "nor", "so", "yet"},
    "MD": {"can", "could", "may", "might", "must", "shall", "should", "will",
           "would"},
    "VB": {"is", "are", "was", "were", "be", "been", "being", "do", "does",
           "did", "have", "has", "had", "heard", "hear", "smell", "smelled",
           "noticed", "notice", "came", "come", "went", "go"},
}
_LEX_BY_WORD = {w: tag for tag, words in _LEXICON.items() for w in words}


def pos_tag(token: Token) -> str:
    if token.pos is not None:
        return token.pos
    word = token.lower
    if all(not c.isalnum() for c in word):
        return "PUNCT"
    if any(c.isdigit() for c in word):
        return "CD"
    tag = _LEX_BY_WORD.get(word)
    if tag is not None:
        return tag
    if word.endswith("ing"):
        return "VBG"
    if word.endswith("ed"):
        return "VBD"
    if word.endswith("ly"):
        return "RB"
    if word.endswith(("ous", "ful", "ive", "able", "ible", "al", "ic")):
        return "JJ"
    if word.endswith("s") and len(word) > 3:
        return "NNS"
    return "NN"
