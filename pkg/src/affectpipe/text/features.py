"""Story-level linguistic feature vectors.

A FeatureVector is an ordered list of named blocks; every scalar inside a
block carries a stable feature name so subset selection and CSV dumps can
address single features.
"""

from __future__ import annotations

import dataclasses
import logging
from pathlib import Path

import numpy as np

from ..errors import DataError
from .lexicons import Lexicon
from .tokens import TokenSeq, lemma_candidates

log = logging.getLogger(__name__)

SENTIWS_FEATURE_NAMES = (
    "sentiws.min",
    "sentiws.max",
    "sentiws.range",
    "sentiws.mean",
    "sentiws.sum",
    "sentiws.n_pos",
    "sentiws.n_neg",
)

SENTIWORDNET_FEATURE_NAMES = (
    "sentiwordnet.pos_min",
    "sentiwordnet.pos_max",
    "sentiwordnet.pos_range",
    "sentiwordnet.pos_mean",
    "sentiwordnet.pos_sum",
    "sentiwordnet.pos_count",
    "sentiwordnet.neg_min",
    "sentiwordnet.neg_max",
    "sentiwordnet.neg_range",
    "sentiwordnet.neg_mean",
    "sentiwordnet.neg_sum",
    "sentiwordnet.neg_count",
)


@dataclasses.dataclass
class FeatureBlock:
    name: str
    values: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise DataError(f"block {self.name!r}: values must be 1-D")
        if len(self.values) != len(self.feature_names):
            raise DataError(
                f"block {self.name!r}: {len(self.values)} values vs "
                f"{len(self.feature_names)} names"
            )


@dataclasses.dataclass
class FeatureVector:
    blocks: list[FeatureBlock]

    @property
    def total_dim(self) -> int:
        return sum(len(b.values) for b in self.blocks)

    def concat(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate([b.values for b in self.blocks])

    def names(self) -> list[str]:
        out: list[str] = []
        for b in self.blocks:
            out.extend(b.feature_names)
        return out

    def block(self, name: str) -> FeatureBlock:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


def _sequence_stats(scores: list[float]) -> tuple[float, float, float, float, float]:
    """(min, max, range, mean, sum); all zero for an empty sequence."""
    if not scores:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    arr = np.asarray(scores, dtype=np.float64)
    lo = float(arr.min())
    hi = float(arr.max())
    return lo, hi, hi - lo, float(arr.mean()), float(arr.sum())


def sentiws_features(lex: Lexicon, doc: TokenSeq) -> FeatureVector:
    """Seven summary statistics of the story's SentiWS polarity scores.

    Per token: exact lemma lookup, falling back to the inflection index,
    both POS-blind; several matches average into one score. Order of the
    statistics: min, max, range, mean, sum, #positive, #negative.
    """
    scores: list[float] = []
    for token in doc:
        hits = lex.polarity_scores(token.surface)
        if hits:
            scores.append(float(np.mean(hits)))
    lo, hi, rng, mean, total = _sequence_stats(scores)
    n_pos = float(sum(1 for s in scores if s > 0))
    n_neg = float(sum(1 for s in scores if s < 0))
    values = np.array([lo, hi, rng, mean, total, n_pos, n_neg])
    return FeatureVector([FeatureBlock("sentiws", values, SENTIWS_FEATURE_NAMES)])


def sentiwordnet_features(lex: Lexicon, doc: TokenSeq) -> FeatureVector:
    """Twelve statistics over the story's SentiWordNet score pairs.

    Per tagged token: (surface, POS) lookup, then rule-based lemma
    candidates on a miss; multi-synset hits average per side. The positive
    and the negative score sequences each yield min, max, range, mean,
    sum, count.
    """
    pos_scores: list[float] = []
    neg_scores: list[float] = []
    for token in doc:
        for candidate in lemma_candidates(token.surface):
            pairs = lex.synset_scores(candidate, token.pos)
            if pairs:
                arr = np.asarray(pairs, dtype=np.float64)
                pos_scores.append(float(arr[:, 0].mean()))
                neg_scores.append(float(arr[:, 1].mean()))
                break
    values = np.array(
        [*_sequence_stats(pos_scores), float(len(pos_scores)),
         *_sequence_stats(neg_scores), float(len(neg_scores))]
    )
    return FeatureVector(
        [FeatureBlock("sentiwordnet", values, SENTIWORDNET_FEATURE_NAMES)]
    )


@dataclasses.dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.vectors)

    def lookup(self, surface: str) -> np.ndarray | None:
        hit = self.vectors.get(surface)
        if hit is None:
            hit = self.vectors.get(surface.lower())
        return hit


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Load a text embedding table: header "count dim", then "word v1 ... v_dim".

    Every row must carry exactly `dim` values; a duplicate word keeps its
    first vector with a warning; a row-count mismatch against the header
    is an error.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}:1: expected header 'count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise DataError(f"{path}:1: non-integer header {header!r}") from None
        if count < 0 or dim <= 0:
            raise DataError(f"{path}:1: invalid header counts {header!r}")
        vectors: dict[str, np.ndarray] = {}
        n_rows = 0
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            n_rows += 1
            parts = raw.split()
            word = parts[0]
            if len(parts) - 1 != dim:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}"
                )
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector entry") from None
            if word in vectors:
                log.warning("%s:%d: duplicate word %r, first kept", path, lineno, word)
                continue
            vectors[word] = vec
    if n_rows != count:
        raise DataError(f"{path}: header claims {count} rows, file has {n_rows}")
    return EmbeddingTable(dim, vectors)


def embed_average(table: EmbeddingTable, doc: TokenSeq) -> FeatureVector:
    """Mean embedding of all in-vocabulary tokens; zeros when none match.

    Lookup tries the surface as written, then lowercased.
    """
    hits = [table.lookup(t.surface) for t in doc]
    hits = [h for h in hits if h is not None]
    if hits:
        mean = np.mean(hits, axis=0)
    else:
        log.warning("no token of a %d-token document is in the embedding table", len(doc))
        mean = np.zeros(table.dim)
    names = tuple(f"embed.{i:03d}" for i in range(table.dim))
    return FeatureVector([FeatureBlock("embeddings", mean, names)])
