"""Linguistic stack: tokenization, stemming, lexicons, embeddings, TF-IDF,
and dictionary-feature subset selection."""

import numpy as np
import pytest
from sklearn.feature_extraction.text import TfidfVectorizer

from affectpipe.errors import DataError
from affectpipe.text import (
    EmbeddingTable,
    Lexicon,
    coarse_pos,
    embed_average,
    fit_tfidf,
    lemma_candidates,
    load_embeddings,
    load_stopwords,
    parse_sentiws,
    parse_sentiwordnet,
    porter_stem,
    select_dictionary_features,
    sentiws_features,
    sentiwordnet_features,
    tfidf_transform,
    tokenize,
)
from affectpipe.text.features import (
    SENTIWORDNET_FEATURE_NAMES,
    SENTIWS_FEATURE_NAMES,
    FeatureBlock,
    FeatureVector,
)
from affectpipe.text.select import REFERENCE_DICTIONARY_SUBSET
from affectpipe.text.tfidf import _ngrams
from affectpipe.text.tokens import Token, TokenSeq


# ----------------------------------------------------------------------
# tokenization and shallow analysis

def test_tokenize_splits_punctuation_hyphens_underscores():
    doc = tokenize("Well-known words, aren't they? foo_bar!", "en")
    assert doc.surfaces() == ["Well", "known", "words", "aren", "t", "they", "foo", "bar"]
    assert doc.lang == "en"


def test_tokenize_keeps_umlauts_and_case():
    doc = tokenize("Die Ängste waren GROSS.", "de")
    assert doc.surfaces() == ["Die", "Ängste", "waren", "GROSS"]


def test_tokenize_empty_and_tagging():
    assert len(tokenize("", "en")) == 0
    doc = tokenize("quickly jumping wonderful table", "en", tag_pos=True)
    assert [t.pos for t in doc] == ["r", "v", "a", "n"]
    untagged = tokenize("table", "en")
    assert untagged.tokens[0].pos is None


@pytest.mark.parametrize(
    "word,expected",
    [
        ("quickly", "r"),
        ("ugly", "r"),
        ("fly", "n"),  # too short for the -ly rule
        ("wonderful", "a"),
        ("restless", "a"),
        ("terrible", "a"),
        ("glorious", "a"),
        ("table", "n"),  # -able needs at least two extra leading letters
        ("excited", "v"),
        ("interesting", "v"),
        ("simplify", "v"),
        ("house", "n"),
        ("happy", "n"),
    ],
)
def test_coarse_pos_cases(word, expected):
    assert coarse_pos(word) == expected


@pytest.mark.parametrize(
    "surface,expected",
    [
        ("ponies", ["ponies", "pony"]),
        ("boxes", ["boxes", "boxe", "box"]),
        ("cats", ["cats", "cat"]),
        ("glass", ["glass"]),
        ("was", ["was"]),
        ("running", ["running", "runn", "runne", "run"]),
        ("hoping", ["hoping", "hop", "hope"]),
        ("hoped", ["hoped", "hope", "hop"]),
        ("tanned", ["tanned", "tanne", "tann", "tan"]),
        ("Joys", ["joys", "joy"]),
    ],
)
def test_lemma_candidates(surface, expected):
    assert lemma_candidates(surface) == expected


# ----------------------------------------------------------------------
# Porter stemmer (the full frozen vocabulary runs in the acceptance suite)

@pytest.mark.parametrize(
    "word,stem",
    [
        ("caresses", "caress"),
        ("ponies", "poni"),
        ("hopping", "hop"),
        ("filing", "file"),
        ("relational", "relat"),
        ("generalization", "gener"),
        ("argument", "argument"),
    ],
)
def test_porter_spot_checks(word, stem):
    assert porter_stem(word) == stem


def test_porter_leaves_short_and_non_alpha_tokens():
    for token in ("a", "be", "is", "123", "x9y", "müde", ""):
        assert porter_stem(token) == token


# ----------------------------------------------------------------------
# lexicon parsing

def test_parse_sentiws_lookup_paths(tmp_path):
    path = tmp_path / "sws.txt"
    path.write_text(
        "gut|ADJX\t0.5\tgute,guter\n"
        "gut|NN\t0.3\n"
        "schlecht|ADJX\t-0.7\tschlechte\n",
        encoding="utf-8",
    )
    lex = parse_sentiws(path)
    assert lex.language == "de"
    assert len(lex) == 3
    # lemma lookup is POS-blind and returns every entry's score
    assert sorted(lex.polarity_scores("GUT")) == [0.3, 0.5]
    # inflections resolve to their entry only
    assert lex.polarity_scores("gute") == [0.5]
    assert lex.polarity_scores("schlechte") == [-0.7]
    assert lex.polarity_scores("unbekannt") == []


@pytest.mark.parametrize(
    "line,match",
    [
        ("gut 0.5", "malformed"),
        ("gut|ADJX\tabc", "non-numeric"),
        ("gut|ADJX\t1.5", "outside"),
        ("|ADJX\t0.5", "malformed lemma"),
        ("gut|ADJX\t0.5\tx\ty", "malformed"),
    ],
)
def test_parse_sentiws_rejects_bad_lines(tmp_path, line, match):
    path = tmp_path / "bad.txt"
    path.write_text(line + "\n", encoding="utf-8")
    with pytest.raises(DataError, match=match):
        parse_sentiws(path)


def test_parse_sentiws_empty_warns(tmp_path, caplog):
    path = tmp_path / "empty.txt"
    path.write_text("\n\n", encoding="utf-8")
    with caplog.at_level("WARNING"):
        lex = parse_sentiws(path)
    assert len(lex) == 0
    assert any("empty" in r.message for r in caplog.records)


def test_parse_sentiwordnet_semantics(tmp_path):
    path = tmp_path / "swn.tsv"
    path.write_text(
        "# comment line\n"
        "a\t001\t0.5\t0.125\tgood#1 fine#2\tof high quality\n"
        "s\t002\t0.25\t0\tfine#3\tsatellite folds into a\n"
        "n\t003\t0\t0.75\tdread#1\tterror\n",
        encoding="utf-8",
    )
    lex = parse_sentiwordnet(path)
    assert lex.language == "en"
    assert lex.synset_scores("GOOD", "a") == [(0.5, 0.125)]
    # the satellite record lands under 'a' and appends to the same key
    assert lex.synset_scores("fine", "a") == [(0.5, 0.125), (0.25, 0.0)]
    assert lex.synset_scores("dread", "n") == [(0.0, 0.75)]
    assert lex.synset_scores("dread", "v") == []
    assert lex.synset_scores("good", None) == []


@pytest.mark.parametrize(
    "line,match",
    [
        ("x\t001\t0.5\t0\tw#1\tgloss", "unknown POS"),
        ("a\t001\t2.0\t0\tw#1\tgloss", "outside"),
        ("a\t001\t0.5\t0\tw#1", "6 tab-separated"),
        ("a\t001\tzz\t0\tw#1\tgloss", "non-numeric"),
    ],
)
def test_parse_sentiwordnet_rejects_bad_lines(tmp_path, line, match):
    path = tmp_path / "bad.tsv"
    path.write_text(line + "\n", encoding="utf-8")
    with pytest.raises(DataError, match=match):
        parse_sentiwordnet(path)


# ----------------------------------------------------------------------
# lexicon feature statistics

def test_sentiws_features_averages_multiple_matches(tmp_path):
    path = tmp_path / "sws.txt"
    path.write_text("gut|ADJX\t0.5\n" "gut|NN\t0.3\n" "kalt|ADJX\t-0.4\n", encoding="utf-8")
    lex = parse_sentiws(path)
    doc = tokenize("gut und kalt", "de")
    fv = sentiws_features(lex, doc)
    block = fv.block("sentiws")
    assert block.feature_names == SENTIWS_FEATURE_NAMES
    # "gut" hits two entries and contributes their mean 0.4
    expected = {
        "sentiws.min": -0.4,
        "sentiws.max": 0.4,
        "sentiws.range": 0.8,
        "sentiws.mean": 0.0,
        "sentiws.sum": 0.0,
        "sentiws.n_pos": 1.0,
        "sentiws.n_neg": 1.0,
    }
    for name, value in zip(block.feature_names, block.values):
        assert value == pytest.approx(expected[name], abs=1e-12)


def test_sentiws_features_empty_document_is_all_zero(tmp_path):
    path = tmp_path / "sws.txt"
    path.write_text("gut|ADJX\t0.5\n", encoding="utf-8")
    fv = sentiws_features(parse_sentiws(path), tokenize("", "de"))
    assert np.all(fv.concat() == 0.0)


def test_sentiwordnet_features_pos_gating_and_averaging(tmp_path):
    path = tmp_path / "swn.tsv"
    path.write_text(
        "n\t001\t0.5\t0\tcalm#1\tgloss\n"
        "n\t002\t1.0\t0.25\tcalm#2\tgloss\n"
        "a\t003\t0\t1.0\tcalm#3\tnever reachable for a noun-tagged token\n"
        "n\t004\t0\t0.5\tstorm#1\tgloss\n",
        encoding="utf-8",
    )
    lex = parse_sentiwordnet(path)
    doc = tokenize("calm storms", "en", tag_pos=True)
    fv = sentiwordnet_features(lex, doc)
    block = fv.block("sentiwordnet")
    assert block.feature_names == SENTIWORDNET_FEATURE_NAMES
    got = dict(zip(block.feature_names, block.values))
    # calm averages its two n-synsets: pos (0.5+1.0)/2, neg (0+0.25)/2;
    # "storms" falls back to the lemma candidate "storm"
    assert got["sentiwordnet.pos_mean"] == pytest.approx(0.375)
    assert got["sentiwordnet.pos_sum"] == pytest.approx(0.75)
    assert got["sentiwordnet.pos_count"] == 2.0
    assert got["sentiwordnet.neg_mean"] == pytest.approx((0.125 + 0.5) / 2)
    assert got["sentiwordnet.neg_max"] == 0.5
    assert got["sentiwordnet.neg_count"] == 2.0


def test_feature_vector_block_bookkeeping():
    fv = FeatureVector(
        [
            FeatureBlock("a", np.array([1.0, 2.0]), ("a.x", "a.y")),
            FeatureBlock("b", np.array([3.0]), ("b.z",)),
        ]
    )
    assert fv.total_dim == 3
    assert fv.names() == ["a.x", "a.y", "b.z"]
    assert np.allclose(fv.concat(), [1.0, 2.0, 3.0])
    assert fv.block("b").values[0] == 3.0
    with pytest.raises(KeyError):
        fv.block("c")
    with pytest.raises(DataError, match="values vs"):
        FeatureBlock("bad", np.array([1.0]), ("x", "y"))
    with pytest.raises(DataError, match="1-D"):
        FeatureBlock("bad", np.ones((2, 2)), ("x", "y"))


# ----------------------------------------------------------------------
# embeddings

def _embedding_file(tmp_path, text):
    path = tmp_path / "emb.txt"
    path.write_text(text, encoding="utf-8")
    return path


def test_load_embeddings_and_lookup(tmp_path):
    path = _embedding_file(tmp_path, "2 3\nhaus 1 2 3\nbaum 0.5 -1 0\n")
    table = load_embeddings(path)
    assert table.dim == 3
    assert len(table) == 2
    assert np.allclose(table.lookup("haus"), [1, 2, 3])
    # surface miss falls back to the lowercased form
    assert np.allclose(table.lookup("Haus"), [1, 2, 3])
    assert table.lookup("street") is None


def test_load_embeddings_rejections(tmp_path):
    with pytest.raises(DataError, match="header"):
        load_embeddings(_embedding_file(tmp_path, "justone\nx 1\n"))
    with pytest.raises(DataError, match="expected 2 values"):
        load_embeddings(_embedding_file(tmp_path, "1 2\nx 1 2 3\n"))
    with pytest.raises(DataError, match="claims 2 rows"):
        load_embeddings(_embedding_file(tmp_path, "2 2\nx 1 2\n"))
    with pytest.raises(DataError, match="non-numeric"):
        load_embeddings(_embedding_file(tmp_path, "1 2\nx 1 z\n"))


def test_load_embeddings_duplicate_keeps_first(tmp_path, caplog):
    path = _embedding_file(tmp_path, "2 2\nx 1 2\nx 9 9\n")
    with caplog.at_level("WARNING"):
        table = load_embeddings(path)
    assert np.allclose(table.vectors["x"], [1, 2])
    assert any("duplicate" in r.message for r in caplog.records)


def test_embed_average(tmp_path, caplog):
    table = EmbeddingTable(2, {"sun": np.array([1.0, 0.0]), "moon": np.array([0.0, 2.0])})
    doc = tokenize("sun and moon", "en")
    fv = embed_average(table, doc)
    block = fv.block("embeddings")
    assert block.feature_names == ("embed.000", "embed.001")
    assert np.allclose(block.values, [0.5, 1.0])
    with caplog.at_level("WARNING"):
        fv2 = embed_average(table, tokenize("nothing matches here", "en"))
    assert np.all(fv2.concat() == 0.0)
    assert any("embedding table" in r.message for r in caplog.records)


# ----------------------------------------------------------------------
# TF-IDF

def test_stopword_loading(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("# comment\nThe  \nand # trailing note\n\nDAS\n", encoding="utf-8")
    assert load_stopwords(path) == frozenset({"the", "and", "das"})


def test_tfidf_hand_computed_example():
    doc1 = tokenize("b a b", "de")
    doc2 = tokenize("a c", "de")
    model = fit_tfidf([doc1, doc2], "de")
    assert model.feature_names == ("a", "a b", "a c", "b", "b a", "c")
    k = np.log(1.5) + 1.0  # idf of every df=1 gram; "a" has df=2 -> idf 1
    assert np.allclose(model.idf, [1.0, k, k, k, k, k])
    weighted = np.array([1.0, k, 0.0, 2 * k, k, 0.0])
    expected = weighted / np.linalg.norm(weighted)
    out = tfidf_transform(model, doc1).concat()
    assert np.allclose(out, expected, atol=1e-12)


def test_tfidf_stopwords_bridge_bigrams():
    # after dropping the stopword, the remaining terms become adjacent
    doc = tokenize("b a b", "de")
    model = fit_tfidf([doc], "de", stopwords=frozenset({"a"}))
    assert model.feature_names == ("b", "b b")


def test_tfidf_english_stems_terms():
    doc = tokenize("running runner", "en")
    model = fit_tfidf([doc], "en")
    assert model.feature_names == ("run", "run runner", "runner")


def test_tfidf_sublinear_and_oov():
    doc1 = tokenize("b b b a", "de")
    model = fit_tfidf([doc1, tokenize("a", "de")], "de", sublinear_tf=True)
    out = tfidf_transform(model, doc1).concat()
    got = dict(zip(model.feature_names, out))
    ratio = got["b"] / got["a"]
    k = np.log(1.5) + 1.0
    assert ratio == pytest.approx((1 + np.log(3.0)) * k / 1.0)
    # transforming a fully out-of-vocabulary document gives zeros
    zeros = tfidf_transform(model, tokenize("x y z", "de")).concat()
    assert np.all(zeros == 0.0)


def test_tfidf_matches_sklearn(rng):
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    docs = [
        tokenize(" ".join(rng.choice(words, size=rng.integers(3, 9))), "de")
        for _ in range(12)
    ]
    model = fit_tfidf(docs, "de")
    mine = np.vstack([tfidf_transform(model, d).concat() for d in docs])

    gram_lists = [_ngrams(d, "de", frozenset()) for d in docs]
    vec = TfidfVectorizer(analyzer=lambda d: d, norm="l2", smooth_idf=True)
    theirs = vec.fit_transform(gram_lists).toarray()
    order = np.argsort(vec.get_feature_names_out())
    assert tuple(np.array(vec.get_feature_names_out())[order]) == model.feature_names
    assert np.allclose(mine, theirs[:, order], atol=1e-10)


def test_fit_tfidf_errors():
    with pytest.raises(DataError, match="at least one"):
        fit_tfidf([], "de")
    with pytest.raises(DataError, match="empty TF-IDF vocabulary"):
        fit_tfidf([tokenize("", "de")], "de")


# ----------------------------------------------------------------------
# dictionary subset selection

def test_select_prefers_informative_feature(rng):
    labels = np.repeat([0, 1, 2], 30)
    sig = labels + rng.normal(scale=0.05, size=90)
    noise = rng.normal(size=90)
    rows = np.column_stack([noise, sig])
    folds = np.tile([0, 1, 2], 30)
    picked = select_dictionary_features(rows, ["noise", "sig"], labels, folds, max_cardinality=2)
    assert picked == ("sig",)


def test_select_tie_breaks_to_smaller_then_lexicographic(rng):
    labels = np.repeat([0, 1, 2], 20)
    col = labels + rng.normal(scale=0.01, size=60)
    rows = np.column_stack([col, col])  # identical twins
    folds = np.tile([0, 1], 30)
    picked = select_dictionary_features(rows, ["beta", "alpha"], labels, folds, max_cardinality=2)
    assert picked == ("alpha",)


def test_select_validation():
    rows = np.ones((6, 2))
    with pytest.raises(DataError, match="2 folds"):
        select_dictionary_features(rows, ["a", "b"], [0] * 6, [0] * 6)
    with pytest.raises(DataError, match="feature names"):
        select_dictionary_features(rows, ["a"], [0] * 6, [0, 0, 0, 1, 1, 1])
    with pytest.raises(DataError, match="length"):
        select_dictionary_features(rows, ["a", "b"], [0] * 5, [0, 0, 0, 1, 1, 1])
    with pytest.raises(DataError, match="empty candidate"):
        select_dictionary_features(np.ones((6, 0)), [], [0] * 6, [0] * 6)


def test_reference_subset_names_are_real_statistics():
    pool = set(SENTIWS_FEATURE_NAMES) | set(SENTIWORDNET_FEATURE_NAMES)
    assert set(REFERENCE_DICTIONARY_SUBSET) <= pool
    assert len(set(REFERENCE_DICTIONARY_SUBSET)) == 5
