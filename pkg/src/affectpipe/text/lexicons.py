"""Sentiment lexicon parsing and lookup.

Two formats are supported: the German SentiWS distribution (one signed
score per lemma, with inflection lists) and the SentiWordNet 3.0 TSV
(positive/negative score pairs per synset). Lookup keys are lowercased on
both sides so tokenization case never decides a hit.
"""

from __future__ import annotations

import dataclasses
import logging
from pathlib import Path

from ..errors import DataError

log = logging.getLogger(__name__)

_SWN_POS = frozenset("nvars")


@dataclasses.dataclass
class Lexicon:
    """Entries keyed by (lemma, POS); values are score records.

    SentiWS records are floats in [-1, 1]; SentiWordNet records are
    (positive, negative) pairs, several per key when a term appears in
    several synsets. `inflection_index` maps inflected surfaces back to
    their entry keys (SentiWS only).
    """

    language: str
    entries: dict[tuple[str, str | None], list]
    inflection_index: dict[str, list[tuple[str, str | None]]]
    _by_lemma: dict[str, list] = dataclasses.field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def polarity_scores(self, surface: str) -> list[float]:
        """SentiWS path: exact lemma hit first, else inflection lookup.

        POS is ignored; every matching entry contributes one score and the
        caller averages. Returns [] on a miss.
        """
        key = surface.lower()
        direct = self._by_lemma.get(key)
        if direct:
            return list(direct)
        out: list[float] = []
        for entry_key in self.inflection_index.get(key, ()):
            out.extend(self.entries[entry_key])
        return out

    def synset_scores(self, term: str, pos: str | None) -> list[tuple[float, float]]:
        """SentiWordNet path: (term, POS) hit or []."""
        return self.entries.get((term.lower(), pos), [])


def parse_sentiws(path: str | Path) -> Lexicon:
    """Parse a SentiWS file: `Lemma|POS<TAB>score[<TAB>infl1,infl2,...]`.

    Scores must lie in [-1, 1]. Malformed lines and out-of-range scores
    raise DataError naming the line.
    """
    path = Path(path)
    entries: dict[tuple[str, str | None], list] = {}
    inflection_index: dict[str, list[tuple[str, str | None]]] = {}
    by_lemma: dict[str, list] = {}
    n_lines = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            n_lines += 1
            fields = line.split("\t")
            if len(fields) not in (2, 3) or "|" not in fields[0]:
                raise DataError(f"{path}:{lineno}: malformed SentiWS line: {line!r}")
            lemma_field, score_field = fields[0], fields[1]
            lemma, _, pos = lemma_field.partition("|")
            if not lemma or not pos:
                raise DataError(f"{path}:{lineno}: malformed lemma field {lemma_field!r}")
            try:
                score = float(score_field)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric score {score_field!r}") from None
            if not -1.0 <= score <= 1.0:
                raise DataError(f"{path}:{lineno}: score {score} outside [-1, 1]")
            key = (lemma.lower(), pos)
            entries.setdefault(key, []).append(score)
            by_lemma.setdefault(key[0], []).append(score)
            if len(fields) == 3 and fields[2]:
                for infl in fields[2].split(","):
                    infl = infl.strip().lower()
                    if infl:
                        inflection_index.setdefault(infl, []).append(key)
    if n_lines == 0:
        log.warning("SentiWS file %s is empty", path)
    return Lexicon("de", entries, inflection_index, by_lemma)


def parse_sentiwordnet(path: str | Path) -> Lexicon:
    """Parse SentiWordNet 3.0 TSV: POS, ID, PosScore, NegScore, SynsetTerms, Gloss.

    `#` lines are comments. Satellite adjectives ('s') fold into 'a'. Each
    "term#sense" in the synset-terms column yields one (pos, neg) record
    under (term, POS).
    """
    path = Path(path)
    entries: dict[tuple[str, str | None], list] = {}
    n_lines = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            n_lines += 1
            fields = line.split("\t")
            if len(fields) != 6:
                raise DataError(
                    f"{path}:{lineno}: expected 6 tab-separated columns, got {len(fields)}"
                )
            pos_tag, _synset_id, pos_score_f, neg_score_f, terms_field = fields[:5]
            if pos_tag not in _SWN_POS:
                raise DataError(f"{path}:{lineno}: unknown POS column value {pos_tag!r}")
            if pos_tag == "s":
                pos_tag = "a"
            try:
                pos_score = float(pos_score_f)
                neg_score = float(neg_score_f)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric scores") from None
            for value, side in ((pos_score, "PosScore"), (neg_score, "NegScore")):
                if not 0.0 <= value <= 1.0:
                    raise DataError(f"{path}:{lineno}: {side} {value} outside [0, 1]")
            for term_entry in terms_field.split():
                term = term_entry.rsplit("#", 1)[0].lower()
                if term:
                    entries.setdefault((term, pos_tag), []).append((pos_score, neg_score))
    if n_lines == 0:
        log.warning("SentiWordNet file %s is empty", path)
    return Lexicon("en", entries, {})
