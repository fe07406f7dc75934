"""Fisher Vector encoding of pooled LLDs over a diagonal-GMM background model.

PCA here is a rotation only (no whitening): the GMM variances absorb the
per-axis scale. The same routine serves both PCA uses in the pipeline,
de-correlating LLD frames before the GMM and shrinking encoded FVs before
classification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DataError, NumericalError

log = logging.getLogger(__name__)

EM_MAX_ITER = 200
EM_REL_TOL = 1e-6
VAR_FLOOR_FRACTION = 1e-4
WEIGHT_COLLAPSE = 1e-8
EIG_DROP_FRACTION = 1e-12


@dataclass
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray  # D x K, orthonormal columns
    explained_ratio: np.ndarray  # cumulative variance fraction per component

    @property
    def n_components(self) -> int:
        return self.basis.shape[1]


@dataclass
class GmmModel:
    weights: np.ndarray  # (K,), simplex
    means: np.ndarray  # (K, D)
    variances: np.ndarray  # (K, D), floored
    train_log_likelihood: float
    log_likelihoods: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def n_dims(self) -> int:
        return self.means.shape[1]


@dataclass
class FisherVector:
    values: np.ndarray
    normalized: frozenset[str] = frozenset()


def fit_pca(
    rows: np.ndarray,
    variance: float | None = None,
    n_components: int | None = None,
) -> PcaModel:
    """Eigen-decomposition of the sample covariance; rotation only.

    Exactly one of `variance` (retain the smallest K whose cumulative
    explained ratio reaches it) or `n_components` must be given.
    Near-zero eigenvalues (< 1e-12 * trace) are dropped, which handles
    rank-deficient covariances. Wide data (fewer rows than dimensions,
    e.g. encoded FVs) is handled through the N x N Gram matrix, which
    shares the covariance spectrum.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if (variance is None) == (n_components is None):
        raise DataError("give exactly one of variance or n_components")
    n, d = rows.shape
    if n < 2:
        raise DataError(f"need at least 2 rows to fit PCA, got {n}")
    mean = rows.mean(axis=0)
    centered = rows - mean[None, :]
    use_gram = n <= d
    if use_gram:
        scatter = centered @ centered.T / (n - 1)
    else:
        scatter = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(scatter)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    total = float(np.sum(eigvals))
    if total <= 0.0:
        raise NumericalError("covariance has non-positive trace; cannot fit PCA")
    keep = eigvals >= EIG_DROP_FRACTION * total
    eigvals = eigvals[keep]
    eigvecs = eigvecs[:, keep]
    if use_gram:
        # lift Gram eigenvectors u into data space: v = C^T u / sqrt((n-1) lambda)
        eigvecs = centered.T @ eigvecs / np.sqrt((n - 1) * eigvals)[None, :]
    cumratio = np.cumsum(eigvals) / total
    if variance is not None:
        if not 0.0 < variance <= 1.0:
            raise DataError(f"variance target must be in (0, 1], got {variance}")
        k = int(np.searchsorted(cumratio, variance) + 1)
        k = min(k, len(eigvals))
    else:
        if n_components < 1:
            raise DataError(f"n_components must be >= 1, got {n_components}")
        if n_components > d:
            raise DataError(f"n_components {n_components} exceeds data dimension {d}")
        k = min(n_components, len(eigvals))
        if k < n_components:
            log.warning("rank-deficient data: retaining %d of %d requested components", k, n_components)
    basis = eigvecs[:, :k]
    # fix signs so repeated fits are bit-identical regardless of LAPACK quirks
    flips = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(k)])
    flips[flips == 0] = 1.0
    basis = basis * flips[None, :]
    return PcaModel(mean=mean, basis=basis, explained_ratio=cumratio[:k])


def apply_pca(model: PcaModel, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[1] != model.mean.shape[0]:
        raise DataError(f"row width {rows.shape[1]} != model width {model.mean.shape[0]}")
    return (rows - model.mean[None, :]) @ model.basis


def _kmeanspp_centers(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = rows.shape[0]
    centers = np.empty((k, rows.shape[1]))
    centers[0] = rows[rng.integers(n)]
    d2 = np.sum((rows - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[i] = rows[rng.integers(n)]
            continue
        centers[i] = rows[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((rows - centers[i]) ** 2, axis=1))
    return centers


def _log_gaussians(rows: np.ndarray, gmm_w, gmm_mu, gmm_var) -> np.ndarray:
    """log(w_k N(x | mu_k, diag var_k)) for all rows/components, via matmuls."""
    inv = 1.0 / gmm_var  # (K, D)
    log_norm = -0.5 * (
        rows.shape[1] * np.log(2.0 * np.pi) + np.sum(np.log(gmm_var), axis=1)
    )  # (K,)
    quad = (
        0.5 * (rows**2) @ inv.T
        - rows @ (gmm_mu * inv).T
        + 0.5 * np.sum(gmm_mu**2 * inv, axis=1)[None, :]
    )
    return np.log(gmm_w)[None, :] + log_norm[None, :] - quad


def gmm_posteriors(model: GmmModel, rows: np.ndarray) -> tuple[np.ndarray, float]:
    """Responsibilities gamma (N, K) and total log-likelihood of rows."""
    lg = _log_gaussians(rows, model.weights, model.means, model.variances)
    norm = logsumexp(lg, axis=1)
    return np.exp(lg - norm[:, None]), float(norm.sum())


def fit_gmm(rows: np.ndarray, k_gmm: int, seed: int) -> GmmModel:
    """Diagonal-covariance EM from seeded k-means++ initialization.

    Stops on relative log-likelihood gain < 1e-6 or 200 iterations;
    variances floored at 1e-4 of the global per-dimension variance.
    A collapsed component (weight < 1e-8) triggers one re-seed, then an error.
    """
    rows = np.asarray(rows, dtype=np.float64)
    n, d = rows.shape
    if k_gmm < 1:
        raise DataError(f"K_GMM must be >= 1, got {k_gmm}")
    if k_gmm > n:
        raise DataError(f"K_GMM={k_gmm} exceeds the {n} available rows")
    global_var = np.maximum(rows.var(axis=0), 1e-12)
    floor = VAR_FLOOR_FRACTION * global_var

    for attempt, use_seed in enumerate((seed, seed + 1)):
        rng = np.random.default_rng(use_seed)
        means = _kmeanspp_centers(rows, k_gmm, rng)
        variances = np.tile(global_var, (k_gmm, 1))
        weights = np.full(k_gmm, 1.0 / k_gmm)
        lls: list[float] = []
        collapsed = False
        for _ in range(EM_MAX_ITER):
            lg = _log_gaussians(rows, weights, means, variances)
            norm = logsumexp(lg, axis=1)
            ll = float(norm.sum())
            if lls and ll - lls[-1] < EM_REL_TOL * abs(lls[-1]):
                lls.append(ll)
                break
            lls.append(ll)
            resp = np.exp(lg - norm[:, None])
            nk = resp.sum(axis=0)
            weights = nk / n
            if np.any(weights < WEIGHT_COLLAPSE):
                collapsed = True
                break
            means = (resp.T @ rows) / nk[:, None]
            ex2 = (resp.T @ rows**2) / nk[:, None]
            variances = np.maximum(ex2 - means**2, floor[None, :])
        if not collapsed:
            return GmmModel(
                weights=weights,
                means=means,
                variances=variances,
                train_log_likelihood=lls[-1],
                log_likelihoods=np.asarray(lls),
            )
        if attempt == 0:
            log.warning("GMM component collapsed (seed %d); re-seeding once", use_seed)
    raise NumericalError(f"GMM component collapsed twice (K={k_gmm}, seeds {seed},{seed + 1})")


def encode_fv(model: GmmModel, rows: np.ndarray) -> FisherVector:
    """Encode rows as normalized mean/variance gradient statistics.

    Per component k the mean-gradient block is
    sum_t gamma_t(k) (x_t - mu_k) / sigma_k / (T sqrt(w_k)) and the
    variance-gradient block is
    sum_t gamma_t(k) ((x_t - mu_k)^2 / sigma_k^2 - 1) / (T sqrt(2 w_k));
    blocks are laid out [mean_k | var_k] for k = 1..K.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] == 0:
        raise DataError("cannot encode an empty row set")
    if rows.shape[1] != model.n_dims:
        raise DataError(f"row width {rows.shape[1]} != model width {model.n_dims}")
    t = rows.shape[0]
    resp, _ = gmm_posteriors(model, rows)
    s0 = resp.sum(axis=0)  # (K,)
    s1 = resp.T @ rows  # (K, D)
    s2 = resp.T @ rows**2  # (K, D)
    sigma = np.sqrt(model.variances)
    mean_blocks = (s1 - model.means * s0[:, None]) / sigma
    mean_blocks /= t * np.sqrt(model.weights)[:, None]
    var_blocks = (s2 - 2.0 * model.means * s1 + model.means**2 * s0[:, None]) / model.variances
    var_blocks -= s0[:, None]
    var_blocks /= t * np.sqrt(2.0 * model.weights)[:, None]
    values = np.concatenate([mean_blocks, var_blocks], axis=1).reshape(-1)
    return FisherVector(values=values, normalized=frozenset())


def normalize_fv(v: FisherVector, power: bool = True, l2: bool = True) -> FisherVector:
    """Improved-FV post-processing: signed square root, then L2 normalization."""
    x = v.values
    flags = set(v.normalized)
    if power:
        x = np.sign(x) * np.sqrt(np.abs(x))
        flags.add("power")
    if l2:
        norm = np.linalg.norm(x)
        if norm > 0.0:
            x = x / norm
        flags.add("l2")
    return FisherVector(values=x, normalized=frozenset(flags))


def fv_dimension(k_gmm: int, n_dims: int) -> int:
    return 2 * k_gmm * n_dims
