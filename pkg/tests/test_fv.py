"""PCA, diagonal-GMM EM, and Fisher-vector encoding.

Oracles: covariance eigen-identities and scikit-learn PCA for the
rotation, scipy.stats densities for posteriors, and a naive per-frame
accumulation loop for the encoder (the implementation uses vectorized
sufficient statistics, so the loop is an independent computation).
"""

import numpy as np
import pytest
import scipy.stats
from scipy.special import logsumexp
from sklearn.decomposition import PCA as SkPCA

from affectpipe.errors import DataError, NumericalError
from affectpipe.fv import (
    FisherVector,
    GmmModel,
    apply_pca,
    encode_fv,
    fit_gmm,
    fit_pca,
    fv_dimension,
    gmm_posteriors,
    normalize_fv,
)
from affectpipe.modelio import (
    load_gmm,
    load_pca,
    load_pca_gmm,
    save_gmm,
    save_pca,
    save_pca_gmm,
)


def _anisotropic(rng, n=400, scales=(10.0, 5.0, 2.0, 1.0, 0.5, 0.1)):
    return rng.normal(size=(n, len(scales))) * np.asarray(scales)[None, :]


# ----------------------------------------------------------------------
# PCA

def test_fit_pca_argument_validation(rng):
    rows = rng.normal(size=(10, 3))
    with pytest.raises(DataError, match="exactly one"):
        fit_pca(rows)
    with pytest.raises(DataError, match="exactly one"):
        fit_pca(rows, variance=0.9, n_components=2)
    with pytest.raises(DataError, match="at least 2 rows"):
        fit_pca(rows[:1], n_components=1)
    with pytest.raises(DataError, match="variance target"):
        fit_pca(rows, variance=1.5)
    with pytest.raises(DataError, match="exceeds data dimension"):
        fit_pca(rows, n_components=4)
    with pytest.raises(DataError, match=">= 1"):
        fit_pca(rows, n_components=0)


def test_fit_pca_basis_is_orthonormal_eigenbasis(rng):
    rows = _anisotropic(rng)
    model = fit_pca(rows, n_components=4)
    basis = model.basis
    assert basis.shape == (6, 4)
    assert np.allclose(basis.T @ basis, np.eye(4), atol=1e-10)
    cov = np.cov(rows, rowvar=False)
    for j in range(4):
        v = basis[:, j]
        lam = v @ cov @ v
        assert np.allclose(cov @ v, lam * v, atol=1e-8 * max(1.0, lam))


def test_fit_pca_matches_sklearn(rng):
    rows = _anisotropic(rng)
    model = fit_pca(rows, n_components=3)
    sk = SkPCA(n_components=3).fit(rows)
    for j in range(3):
        mine = model.basis[:, j]
        theirs = sk.components_[j]
        sign = np.sign(np.dot(mine, theirs))
        assert np.allclose(mine, sign * theirs, atol=1e-6)
    assert np.allclose(
        model.explained_ratio, np.cumsum(sk.explained_variance_ratio_), atol=1e-8
    )


def test_fit_pca_variance_target_picks_minimal_k(rng):
    rows = _anisotropic(rng)
    centered = rows - rows.mean(axis=0)
    eig = np.sort(np.linalg.eigvalsh(centered.T @ centered / (len(rows) - 1)))[::-1]
    cum = np.cumsum(eig) / eig.sum()
    for target in (0.5, 0.9, 0.99, 1.0):
        model = fit_pca(rows, variance=target)
        expected = int(np.searchsorted(cum, target) + 1)
        assert model.n_components == min(expected, len(eig))
        assert model.explained_ratio[-1] >= min(target, cum[-1]) - 1e-12


def test_fit_pca_gram_path_for_wide_data(rng):
    rows = rng.normal(size=(20, 50))
    model = fit_pca(rows, n_components=5)
    assert model.basis.shape == (50, 5)
    assert np.allclose(model.basis.T @ model.basis, np.eye(5), atol=1e-9)
    cov = np.cov(rows, rowvar=False)
    for j in range(5):
        v = model.basis[:, j]
        lam = v @ cov @ v
        assert np.allclose(cov @ v, lam * v, atol=1e-8 * max(1.0, lam))
    sk = SkPCA(n_components=5).fit(rows)
    for j in range(5):
        sign = np.sign(np.dot(model.basis[:, j], sk.components_[j]))
        assert np.allclose(model.basis[:, j], sign * sk.components_[j], atol=1e-6)


def test_fit_pca_sign_convention_and_repeatability(rng):
    rows = _anisotropic(rng)
    a = fit_pca(rows, n_components=4)
    b = fit_pca(rows.copy(), n_components=4)
    assert np.array_equal(a.basis, b.basis)
    # the dominant coordinate of every component points positive
    for j in range(a.n_components):
        col = a.basis[:, j]
        assert col[np.argmax(np.abs(col))] > 0


def test_apply_pca_centering_and_width_check(rng):
    rows = _anisotropic(rng)
    model = fit_pca(rows, n_components=2)
    assert np.allclose(apply_pca(model, rows.mean(axis=0)), 0.0, atol=1e-10)
    proj = apply_pca(model, rows)
    assert proj.shape == (len(rows), 2)
    # rotation only: projected variance equals variance along the basis
    assert np.allclose(proj.mean(axis=0), 0.0, atol=1e-10)
    with pytest.raises(DataError, match="width"):
        apply_pca(model, rng.normal(size=(3, 5)))


def test_fit_pca_rank_deficient_drops_null_directions(rng):
    base = rng.normal(size=(100, 2))
    rows = np.hstack([base, base @ rng.normal(size=(2, 3))])  # rank 2 in 5 dims
    model = fit_pca(rows, variance=1.0)
    assert model.n_components == 2


# ----------------------------------------------------------------------
# GMM

def test_fit_gmm_k1_closed_form(rng):
    rows = rng.normal(loc=3.0, scale=2.0, size=(500, 3))
    model = fit_gmm(rows, 1, seed=0)
    assert model.weights.shape == (1,)
    assert model.weights[0] == pytest.approx(1.0)
    assert np.allclose(model.means[0], rows.mean(axis=0), atol=1e-10)
    assert np.allclose(model.variances[0], rows.var(axis=0), atol=1e-8)


def test_fit_gmm_recovers_separated_blobs(rng):
    centers = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]])
    rows = np.vstack([rng.normal(loc=c, scale=0.5, size=(300, 2)) for c in centers])
    model = fit_gmm(rows, 3, seed=4)
    assert np.allclose(model.weights.sum(), 1.0)
    assert np.all(model.weights > 0.2)
    # match fitted means to true centers greedily by distance
    found = sorted(tuple(np.round(m).astype(int)) for m in model.means)
    assert found == sorted(tuple(c.astype(int)) for c in centers)
    assert np.all(np.diff(model.log_likelihoods) >= -1e-8)
    assert model.train_log_likelihood == model.log_likelihoods[-1]


def test_fit_gmm_determinism_and_validation(rng):
    rows = rng.normal(size=(120, 4))
    a = fit_gmm(rows, 4, seed=9)
    b = fit_gmm(rows, 4, seed=9)
    assert np.array_equal(a.means, b.means)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.variances, b.variances)
    with pytest.raises(DataError, match="exceeds"):
        fit_gmm(rows[:3], 4, seed=0)
    with pytest.raises(DataError, match=">= 1"):
        fit_gmm(rows, 0, seed=0)


def test_fit_gmm_variance_floor(rng):
    # one coordinate is constant inside each blob: the floor must keep
    # variances strictly positive
    rows = np.vstack(
        [
            np.column_stack([rng.normal(size=200), np.full(200, 1.0)]),
            np.column_stack([rng.normal(loc=6.0, size=200), np.full(200, -1.0)]),
        ]
    )
    model = fit_gmm(rows, 2, seed=1)
    assert np.all(model.variances > 0.0)
    global_var = rows.var(axis=0)
    assert np.all(model.variances >= 1e-4 * global_var - 1e-15)


def test_gmm_posteriors_match_scipy_densities(rng):
    model = GmmModel(
        weights=np.array([0.3, 0.7]),
        means=np.array([[0.0, 1.0], [3.0, -2.0]]),
        variances=np.array([[1.0, 0.5], [2.0, 1.5]]),
        train_log_likelihood=0.0,
    )
    rows = rng.normal(size=(40, 2))
    resp, total = gmm_posteriors(model, rows)
    assert np.allclose(resp.sum(axis=1), 1.0, atol=1e-12)

    log_joint = np.empty((40, 2))
    for k in range(2):
        comp = np.zeros(40)
        for d in range(2):
            comp += scipy.stats.norm.logpdf(
                rows[:, d], model.means[k, d], np.sqrt(model.variances[k, d])
            )
        log_joint[:, k] = np.log(model.weights[k]) + comp
    norm = logsumexp(log_joint, axis=1)
    assert np.allclose(resp, np.exp(log_joint - norm[:, None]), atol=1e-10)
    assert total == pytest.approx(float(norm.sum()), rel=1e-12)


# ----------------------------------------------------------------------
# Fisher vectors

def _naive_fv(model, rows):
    """Frame-by-frame accumulation of the two gradient blocks."""
    resp, _ = gmm_posteriors(model, rows)
    t = rows.shape[0]
    d = model.n_dims
    sigma = np.sqrt(model.variances)
    out = np.zeros((model.n_components, 2 * d))
    for i in range(t):
        for j in range(model.n_components):
            g = resp[i, j]
            z = (rows[i] - model.means[j]) / sigma[j]
            out[j, :d] += g * z
            out[j, d:] += g * (z**2 - 1.0)
    out[:, :d] /= (t * np.sqrt(model.weights))[:, None]
    out[:, d:] /= (t * np.sqrt(2.0 * model.weights))[:, None]
    return out.reshape(-1)


def test_encode_fv_matches_naive_loop(rng):
    rows = rng.normal(size=(60, 3))
    model = fit_gmm(rows, 4, seed=2)
    fv = encode_fv(model, rows)
    assert fv.values.shape == (fv_dimension(4, 3),)
    assert fv.normalized == frozenset()
    assert np.allclose(fv.values, _naive_fv(model, rows), atol=1e-10)


def test_encode_fv_k1_closed_form(rng):
    rows = rng.normal(size=(50, 4))
    mu = np.array([0.5, -1.0, 0.0, 2.0])
    var = np.array([1.0, 4.0, 0.25, 1.0])
    model = GmmModel(np.array([1.0]), mu[None, :], var[None, :], 0.0)
    fv = encode_fv(model, rows)
    z = (rows - mu) / np.sqrt(var)
    assert np.allclose(fv.values[:4], z.mean(axis=0), atol=1e-12)
    assert np.allclose(fv.values[4:], (z**2 - 1.0).mean(axis=0) / np.sqrt(2.0), atol=1e-12)


def test_encode_fv_validation(rng):
    model = fit_gmm(rng.normal(size=(30, 2)), 2, seed=3)
    with pytest.raises(DataError, match="empty"):
        encode_fv(model, np.empty((0, 2)))
    with pytest.raises(DataError, match="width"):
        encode_fv(model, rng.normal(size=(5, 3)))


def test_normalize_fv_power_and_l2():
    fv = FisherVector(np.array([4.0, -9.0, 0.0]))
    powered = normalize_fv(fv, power=True, l2=False)
    assert np.allclose(powered.values, [2.0, -3.0, 0.0])
    assert powered.normalized == frozenset({"power"})
    both = normalize_fv(fv)
    assert both.normalized == frozenset({"power", "l2"})
    assert np.linalg.norm(both.values) == pytest.approx(1.0)
    # all-zero vectors normalize safely
    z = normalize_fv(FisherVector(np.zeros(5)))
    assert np.all(z.values == 0.0)
    assert z.normalized == frozenset({"power", "l2"})


def test_fv_dimension():
    assert fv_dimension(16, 27) == 864
    assert fv_dimension(1, 1) == 2


# ----------------------------------------------------------------------
# model container round trips

def test_model_container_round_trips(tmp_path, rng):
    rows = _anisotropic(rng, n=80)
    pca = fit_pca(rows, n_components=3)
    gmm = fit_gmm(rows, 3, seed=5)

    save_pca(tmp_path / "p.afp", pca)
    p2 = load_pca(tmp_path / "p.afp")
    assert np.array_equal(p2.mean, pca.mean)
    assert np.array_equal(p2.basis, pca.basis)
    assert np.array_equal(p2.explained_ratio, pca.explained_ratio)

    save_gmm(tmp_path / "g.afp", gmm)
    g2 = load_gmm(tmp_path / "g.afp")
    assert np.array_equal(g2.weights, gmm.weights)
    assert np.array_equal(g2.means, gmm.means)
    assert np.array_equal(g2.variances, gmm.variances)
    assert g2.train_log_likelihood == gmm.train_log_likelihood

    save_pca_gmm(tmp_path / "fv.afp", pca, gmm)
    p3, g3 = load_pca_gmm(tmp_path / "fv.afp")
    assert np.array_equal(p3.basis, pca.basis)
    assert np.array_equal(g3.means, gmm.means)

    save_pca_gmm(tmp_path / "fv2.afp", None, gmm)
    p4, g4 = load_pca_gmm(tmp_path / "fv2.afp")
    assert p4 is None
    assert np.array_equal(g4.means, gmm.means)


def test_model_container_rejects_garbage(tmp_path, rng):
    bad = tmp_path / "bad.afp"
    bad.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(DataError, match="magic"):
        load_pca(bad)
    rows = _anisotropic(rng, n=40)
    save_pca(tmp_path / "p.afp", fit_pca(rows, n_components=2))
    with pytest.raises(DataError, match="not a GMM"):
        load_gmm(tmp_path / "p.afp")
