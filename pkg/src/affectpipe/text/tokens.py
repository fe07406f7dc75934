"""Tokenization, coarse POS tagging, and a small rule-based lemmatizer.

The tagger and lemmatizer are deliberately shallow: their job is to feed
lexicon lookups, where a wrong guess degrades to a lookup miss rather
than a wrong score.
"""

from __future__ import annotations

import dataclasses
import re

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

_VOWELS = frozenset("aeiou")

_ADJ_SUFFIXES = ("able", "ible", "ical", "ful", "ish", "ive", "less", "ous", "al", "ic")
_VERB_SUFFIXES = ("ating", "izing", "ising", "ify", "ize", "ise", "ing", "ed")


@dataclasses.dataclass(frozen=True)
class Token:
    surface: str
    pos: str | None = None


@dataclasses.dataclass
class TokenSeq:
    """Ordered tokens of one document; surfaces keep their original case."""

    tokens: list[Token]
    lang: str

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


def tokenize(text: str, lang: str, tag_pos: bool = False) -> TokenSeq:
    """Split on whitespace and punctuation; hyphenated compounds split too.

    Empty text yields an empty sequence. With tag_pos, each token carries a
    coarse tag from `coarse_pos` (English suffix heuristics).
    """
    tokens = []
    for match in _WORD_RE.finditer(text):
        surface = match.group(0)
        pos = coarse_pos(surface) if tag_pos else None
        tokens.append(Token(surface, pos))
    return TokenSeq(tokens, lang)


def coarse_pos(surface: str) -> str:
    """Four-class heuristic tagger: n(oun), v(erb), a(djective), r = adverb.

    Suffix rules on the lowercased surface; noun is the default. The tag
    letters match SentiWordNet's POS column.
    """
    w = surface.lower()
    if len(w) >= 4 and w.endswith("ly"):
        return "r"
    for suf in _ADJ_SUFFIXES:
        if len(w) >= len(suf) + 2 and w.endswith(suf):
            return "a"
    for suf in _VERB_SUFFIXES:
        if len(w) >= len(suf) + 2 and w.endswith(suf):
            return "v"
    return "n"


def _undouble(stem: str) -> str | None:
    # stopp -> stop, runn -> run; only for a doubled final consonant
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS:
        return stem[:-1]
    return None


def lemma_candidates(surface: str) -> list[str]:
    """Lowercase lemma guesses in lookup priority order, surface first.

    Covers plural -s/-es/-ies and the -ing/-ed inflections with
    consonant-doubling undo. Purely orthographic; irregular forms are
    simply not recovered.
    """
    w = surface.lower()
    out = [w]

    def add(candidate: str | None) -> None:
        if candidate and len(candidate) >= 2 and candidate not in out:
            out.append(candidate)

    if w.endswith("ies") and len(w) > 4:
        add(w[:-3] + "y")
    elif w.endswith("es") and len(w) > 3:
        add(w[:-1])
        add(w[:-2])
    elif w.endswith("s") and not w.endswith("ss") and len(w) > 3:
        add(w[:-1])
    if w.endswith("ing") and len(w) > 5:
        base = w[:-3]
        add(base)
        add(base + "e")
        add(_undouble(base))
    elif w.endswith("ed") and len(w) > 4:
        add(w[:-1])
        base = w[:-2]
        add(base)
        add(_undouble(base))
    return out
