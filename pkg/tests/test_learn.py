"""Kernel classifier suite: standardization, gram matrices, the four
kernel models, the ridge baseline, and prediction serialization."""

import numpy as np
import pytest
from scipy.spatial.distance import cdist
from sklearn.kernel_ridge import KernelRidge
from sklearn.linear_model import Ridge

from affectpipe.errors import ConfigError, DataError
from affectpipe.evalcv import uar
from affectpipe.labels import LABELS, Label
from affectpipe.learn import (
    MODEL_KINDS,
    KernelSpec,
    PredictionSet,
    center_test_kernel,
    fit_classifier,
    fit_kelm,
    fit_kpls,
    fit_ridge_ovr,
    gram,
    load_predictions,
    minority_weights,
    one_hot,
    predict,
    save_predictions,
    scores_to_labels,
    standardize_apply,
    standardize_fit,
)

L, M, H = Label.L, Label.M, Label.H


def _blobs(rng, n_per=12, scale=0.1):
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    rows = np.vstack(
        [c + rng.normal(scale=scale, size=(n_per, 2)) for c in centers]
    )
    labels = [L] * n_per + [M] * n_per + [H] * n_per
    return rows, labels


# ----------------------------------------------------------------------
# standardization and kernels

def test_standardize_population_std_and_constant_columns(rng):
    rows = rng.normal(size=(40, 3))
    rows[:, 2] = 7.0
    stats = standardize_fit(rows)
    assert np.allclose(stats.mean, rows.mean(axis=0))
    assert np.allclose(stats.std[:2], rows.std(axis=0)[:2])  # population (ddof=0)
    assert stats.std[2] == 1.0
    z = standardize_apply(stats, rows)
    assert np.allclose(z[:, :2].mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z[:, :2].std(axis=0), 1.0, atol=1e-12)
    assert np.allclose(z[:, 2], 0.0)
    with pytest.raises(DataError, match="non-empty 2-D"):
        standardize_fit(np.zeros((0, 3)))
    with pytest.raises(DataError, match="features vs fitted"):
        standardize_apply(stats, np.zeros((2, 5)))


def test_gram_linear_and_rbf(rng):
    a = rng.normal(size=(7, 4))
    b = rng.normal(size=(5, 4))
    assert np.allclose(gram(KernelSpec("linear"), a, b), a @ b.T, atol=1e-14)
    spec = KernelSpec("rbf", gamma=0.37)
    expected = np.exp(-0.37 * cdist(a, b, "sqeuclidean"))
    got = gram(spec, a, b)
    assert np.allclose(got, expected, atol=1e-12)
    self_k = gram(spec, a, a)
    assert np.allclose(np.diag(self_k), 1.0, atol=1e-12)
    assert np.allclose(self_k, self_k.T, atol=1e-12)
    with pytest.raises(DataError, match="incompatible shapes"):
        gram(spec, a, rng.normal(size=(3, 2)))


def test_kernel_spec_validation():
    with pytest.raises(ConfigError, match="unknown kernel"):
        KernelSpec("poly")
    with pytest.raises(ConfigError, match="gamma"):
        KernelSpec("rbf")
    with pytest.raises(ConfigError, match="gamma"):
        KernelSpec("rbf", gamma=-1.0)


def test_one_hot_and_minority_weights():
    t = one_hot([L, H, M, M])
    assert t.shape == (4, 3)
    assert np.array_equal(t, [[1, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 0]])
    w = minority_weights([L, M, M, H])
    assert np.allclose(w, [4 / 3, 2 / 3, 2 / 3, 4 / 3])
    assert np.allclose(minority_weights([L, M, H] * 5), 1.0)
    assert minority_weights([L, M, M, H]).mean() == pytest.approx(1.0)


# ----------------------------------------------------------------------
# KELM / WKELM

def test_kelm_matches_sklearn_kernel_ridge(rng):
    for n, c_reg in [(30, 1.0), (55, 0.07), (80, 40.0)]:
        x = rng.normal(size=(n, 6))
        k = x @ x.T
        labels = [LABELS[i % 3] for i in range(n)]
        beta = fit_kelm(k, labels, c_reg)
        ref = KernelRidge(alpha=1.0 / c_reg, kernel="precomputed")
        ref.fit(k, one_hot(labels))
        assert np.allclose(beta, ref.dual_coef_, atol=1e-8)


def test_wkelm_matches_direct_weighted_solve(rng):
    n = 40
    x = rng.normal(size=(n, 5))
    k = x @ x.T
    labels = [L] * 8 + [M] * 22 + [H] * 10
    weights = minority_weights(labels)
    beta = fit_kelm(k, labels, 3.0, weights)
    # the weighted system in unsymmetrized form: (I/C + W K) beta = W T
    w_mat = np.diag(weights)
    ref = np.linalg.solve(np.eye(n) / 3.0 + w_mat @ k, w_mat @ one_hot(labels))
    assert np.allclose(beta, ref, atol=1e-8)


def test_wkelm_with_balanced_classes_collapses_to_kelm(rng):
    n = 36
    x = rng.normal(size=(n, 4))
    k = x @ x.T
    labels = [LABELS[i % 3] for i in range(n)]
    plain = fit_kelm(k, labels, 2.5)
    weighted = fit_kelm(k, labels, 2.5, minority_weights(labels))
    assert np.max(np.abs(plain - weighted)) < 1e-10


def test_kelm_validation(rng):
    k = np.eye(4)
    with pytest.raises(ConfigError, match="C_reg"):
        fit_kelm(k, [L, M, H, M], 0.0)
    with pytest.raises(DataError, match="square"):
        fit_kelm(np.ones((3, 4)), [L, M, H], 1.0)
    with pytest.raises(DataError, match="labels"):
        fit_kelm(k, [L, M, H], 1.0)
    with pytest.raises(DataError, match="2 classes"):
        fit_kelm(k, [M, M, M, M], 1.0)
    with pytest.raises(DataError, match="weights shape"):
        fit_kelm(k, [L, M, H, M], 1.0, np.ones(3))
    with pytest.raises(DataError, match="positive"):
        fit_kelm(k, [L, M, H, M], 1.0, np.array([1.0, -1.0, 1.0, 1.0]))


# ----------------------------------------------------------------------
# KPLS / WKPLS

def test_kpls_weighted_balanced_equals_unweighted(rng):
    rows, labels = _blobs(rng)
    k = gram(KernelSpec("linear"), rows, rows)
    a1, cm1, am1, off1 = fit_kpls(k, labels, 2)
    a2, cm2, am2, off2 = fit_kpls(k, labels, 2, weights=np.ones(len(labels)))
    assert np.array_equal(a1, a2)
    assert np.array_equal(cm1, cm2)
    assert am1 == am2
    assert np.array_equal(off1, off2)


def test_kpls_component_count_validation(rng):
    rows, labels = _blobs(rng, n_per=4)
    k = gram(KernelSpec("linear"), rows, rows)
    with pytest.raises(ConfigError, match="L_components"):
        fit_kpls(k, labels, 0)
    with pytest.raises(ConfigError, match="L_components"):
        fit_kpls(k, labels, len(labels))


def test_center_test_kernel_reproduces_train_centering(rng):
    x = rng.normal(size=(9, 3))
    k = x @ x.T
    col_means = k.mean(axis=0)
    all_mean = float(k.mean())
    expected = k - col_means[None, :] - col_means[:, None] + all_mean
    got = center_test_kernel(k, col_means, all_mean)
    assert np.allclose(got, expected, atol=1e-12)
    assert np.allclose(got.mean(axis=0), 0.0, atol=1e-10)


# ----------------------------------------------------------------------
# ridge one-vs-rest

def test_ridge_ovr_matches_sklearn(rng):
    x = rng.normal(size=(60, 5))
    labels = [LABELS[i % 3] for i in range(60)]
    l2 = 0.8
    w, x_mean, y_offsets = fit_ridge_ovr(x, labels, l2)
    test_x = rng.normal(size=(25, 5))
    mine = (test_x - x_mean) @ w + y_offsets
    ref = Ridge(alpha=l2, fit_intercept=True)
    ref.fit(x, one_hot(labels))
    assert np.allclose(mine, ref.predict(test_x), atol=1e-8)


def test_ridge_ovr_validation(rng):
    x = rng.normal(size=(6, 2))
    with pytest.raises(ConfigError, match="l2"):
        fit_ridge_ovr(x, [L, M, H, L, M, H], -0.1)
    with pytest.raises(DataError, match="2 classes"):
        fit_ridge_ovr(x, [H] * 6, 1.0)
    with pytest.raises(DataError, match="labels"):
        fit_ridge_ovr(x, [L, M, H], 1.0)


# ----------------------------------------------------------------------
# label decisions

def test_scores_to_labels_argmax_and_ties():
    counts_h_rare = {L: 5, M: 5, H: 2}
    counts_equal = {L: 5, M: 5, H: 5}
    scores = np.array(
        [
            [0.9, 0.1, 0.0],  # clear L
            [1.0, 1.0, 0.0],  # L/M tie -> M
            [0.0, 1.0, 1.0],  # M/H tie -> M
            [1.0, 0.0, 1.0],  # extremes tie -> rarer extreme
            [0.0, 0.0, 0.0],  # three-way tie -> M
        ]
    )
    got = scores_to_labels(scores, counts_h_rare)
    assert got == [L, M, M, H, M]
    # with equal counts the extreme tie falls back to L
    assert scores_to_labels(scores[3:4], counts_equal) == [L]


# ----------------------------------------------------------------------
# fit_classifier dispatch and prediction round trip

@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_fit_classifier_separates_blobs(rng, kind):
    rows, labels = _blobs(rng)
    model = fit_classifier(kind, rows, labels)
    ids = [f"s{i}" for i in range(len(labels))]
    pset = predict(model, rows, ids)
    assert pset.story_ids == ids
    assert uar(labels, pset.labels) >= 0.9
    assert pset.scores.shape == (len(labels), 3)
    expected_source = kind if kind == "ridge-ovr" else f"{kind}-linear"
    assert pset.source == expected_source


def test_fit_classifier_rbf_kernel(rng):
    rows, labels = _blobs(rng)
    model = fit_classifier("kelm", rows, labels, kernel=KernelSpec("rbf", gamma=0.5))
    pset = predict(model, rows, [str(i) for i in range(len(labels))])
    assert uar(labels, pset.labels) >= 0.9
    assert pset.source == "kelm-rbf"


def test_fit_classifier_unknown_kind(rng):
    rows, labels = _blobs(rng, n_per=3)
    with pytest.raises(ConfigError, match="unknown classifier kind"):
        fit_classifier("svm", rows, labels)


def test_fit_classifier_standardize_off(rng):
    rows, labels = _blobs(rng)
    model = fit_classifier("kelm", rows, labels, standardize=False)
    assert np.all(model.standardizer.mean == 0.0)
    assert np.all(model.standardizer.std == 1.0)


def test_prediction_set_validation():
    with pytest.raises(DataError, match="labels vs"):
        PredictionSet(["a", "b"], [L], np.zeros((2, 3)), "x")
    with pytest.raises(DataError, match="scores must be"):
        PredictionSet(["a", "b"], [L, M], np.zeros((2, 2)), "x")


def test_prediction_round_trip(tmp_path, rng):
    scores = rng.normal(size=(5, 3))
    labels = scores_to_labels(scores, None)
    pset = PredictionSet([f"id{i}" for i in range(5)], labels, scores, "unit-test")
    path = tmp_path / "pred.csv"
    save_predictions(path, pset)
    back = load_predictions(path)
    assert back.story_ids == pset.story_ids
    assert back.labels == pset.labels
    assert back.source == "unit-test"
    assert np.allclose(back.scores, scores, rtol=1e-9, atol=1e-12)


def test_load_predictions_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError, match="empty prediction file"):
        load_predictions(empty)
    bad_header = tmp_path / "header.csv"
    bad_header.write_text("a,b,c\n")
    with pytest.raises(DataError, match="bad header"):
        load_predictions(bad_header)
    short_row = tmp_path / "short.csv"
    short_row.write_text("story_id,label,score_L,score_M,score_H,source\nx,L,1,2\n")
    with pytest.raises(DataError, match="expected 6 fields"):
        load_predictions(short_row)
    bad_score = tmp_path / "score.csv"
    bad_score.write_text("story_id,label,score_L,score_M,score_H,source\nx,L,a,2,3,s\n")
    with pytest.raises(DataError, match="non-numeric score"):
        load_predictions(bad_score)
    no_rows = tmp_path / "norows.csv"
    no_rows.write_text("story_id,label,score_L,score_M,score_H,source\n")
    with pytest.raises(DataError, match="no prediction rows"):
        load_predictions(no_rows)
