"""Linguistic feature extraction: tokens, stems, TF-IDF, lexicons, selection."""

from .features import (
    SENTIWORDNET_FEATURE_NAMES,
    SENTIWS_FEATURE_NAMES,
    EmbeddingTable,
    FeatureBlock,
    FeatureVector,
    embed_average,
    load_embeddings,
    sentiwordnet_features,
    sentiws_features,
)
from .lexicons import Lexicon, parse_sentiws, parse_sentiwordnet
from .porter import porter_stem
from .select import REFERENCE_DICTIONARY_SUBSET, select_dictionary_features
from .tfidf import TfidfModel, fit_tfidf, load_stopwords, tfidf_transform
from .tokens import Token, TokenSeq, coarse_pos, lemma_candidates, tokenize

__all__ = [
    "SENTIWORDNET_FEATURE_NAMES",
    "SENTIWS_FEATURE_NAMES",
    "EmbeddingTable",
    "FeatureBlock",
    "FeatureVector",
    "Lexicon",
    "REFERENCE_DICTIONARY_SUBSET",
    "TfidfModel",
    "Token",
    "TokenSeq",
    "coarse_pos",
    "embed_average",
    "fit_tfidf",
    "lemma_candidates",
    "load_embeddings",
    "load_stopwords",
    "parse_sentiws",
    "parse_sentiwordnet",
    "porter_stem",
    "select_dictionary_features",
    "sentiwordnet_features",
    "sentiws_features",
    "tfidf_transform",
    "tokenize",
]
