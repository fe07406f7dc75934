"""TF-IDF over uni- and bi-grams with stop-word removal and stemming.

English documents are Porter-stemmed after stop-word removal; German
documents only lose stop words (the stemmer is English-only). The idf is
the smoothed variant ln((1+N)/(1+df)) + 1, which never drops below 1.
"""

from __future__ import annotations

import dataclasses
import logging
from pathlib import Path

import numpy as np

from ..errors import DataError
from .porter import porter_stem
from .tokens import TokenSeq
from .features import FeatureBlock, FeatureVector

log = logging.getLogger(__name__)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One lowercase token per line; `#` starts a comment."""
    words = set()
    with Path(path).open(encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                words.add(line.lower())
    return frozenset(words)


@dataclasses.dataclass
class TfidfModel:
    lang: str
    vocabulary: dict[str, int]
    idf: np.ndarray
    feature_names: tuple[str, ...]
    stopwords: frozenset[str]
    sublinear_tf: bool = False

    @property
    def dim(self) -> int:
        return len(self.vocabulary)


def _ngrams(doc: TokenSeq, lang: str, stopwords: frozenset[str]) -> list[str]:
    terms = [t.surface.lower() for t in doc]
    terms = [t for t in terms if t not in stopwords]
    if lang == "en":
        terms = [porter_stem(t) for t in terms]
    bigrams = [f"{a} {b}" for a, b in zip(terms, terms[1:])]
    return terms + bigrams


def fit_tfidf(
    docs: list[TokenSeq],
    lang: str,
    stopwords: frozenset[str] = frozenset(),
    sublinear_tf: bool = False,
) -> TfidfModel:
    """Build the n-gram vocabulary and idf table from training documents.

    Vocabulary columns are sorted lexicographically for a stable layout.
    All documents empty after preprocessing is an error.
    """
    if not docs:
        raise DataError("fit_tfidf needs at least one document")
    df: dict[str, int] = {}
    for doc in docs:
        for gram in set(_ngrams(doc, lang, stopwords)):
            df[gram] = df.get(gram, 0) + 1
    if not df:
        raise DataError("empty TF-IDF vocabulary: all documents empty after filtering")
    names = tuple(sorted(df))
    vocabulary = {gram: j for j, gram in enumerate(names)}
    n_docs = len(docs)
    idf = np.array(
        [np.log((1.0 + n_docs) / (1.0 + df[gram])) + 1.0 for gram in names]
    )
    return TfidfModel(lang, vocabulary, idf, names, stopwords, sublinear_tf)


def tfidf_transform(model: TfidfModel, doc: TokenSeq) -> FeatureVector:
    """Counts times idf, L2-normalized; out-of-vocabulary n-grams ignored."""
    counts = np.zeros(model.dim)
    for gram in _ngrams(doc, model.lang, model.stopwords):
        j = model.vocabulary.get(gram)
        if j is not None:
            counts[j] += 1.0
    if model.sublinear_tf:
        nz = counts > 0
        counts[nz] = 1.0 + np.log(counts[nz])
    weighted = counts * model.idf
    norm = np.linalg.norm(weighted)
    if norm > 0:
        weighted /= norm
    return FeatureVector([FeatureBlock("tfidf", weighted, model.feature_names)])
