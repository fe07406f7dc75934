"""Kernel classifier suite: (weighted) kernel ELM, (weighted) kernel PLS,
and a primal ridge one-vs-rest baseline.

All classifiers share one-hot {0,1} targets, per-feature standardization
fitted on training rows, and the ordinal tie-break (M first, then the
rarer extreme) when decision scores tie.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ConfigError, DataError, NumericalError
from .labels import LABELS, Label, break_tie

log = logging.getLogger(__name__)

KPLS_MAX_NIPALS_ITER = 500
KPLS_NIPALS_TOL = 1e-12

MODEL_KINDS = ("kelm", "wkelm", "kpls", "wkpls", "ridge-ovr")


@dataclasses.dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "rbf"):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and (self.gamma is None or self.gamma <= 0):
            raise ConfigError(f"rbf kernel needs gamma > 0, got {self.gamma}")


@dataclasses.dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray


def standardize_fit(rows: np.ndarray) -> Standardizer:
    """Per-feature mean/std (population); zero-variance features get std 1."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise DataError("standardize_fit needs a non-empty 2-D matrix")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std[std == 0] = 1.0
    return Standardizer(mean, std)


def standardize_apply(stats: Standardizer, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[1] != len(stats.mean):
        raise DataError(
            f"standardize_apply: {rows.shape[1]} features vs fitted {len(stats.mean)}"
        )
    return (rows - stats.mean) / stats.std


def gram(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel matrix K[i, j] = k(a_i, b_j)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DataError(f"gram: incompatible shapes {a.shape} and {b.shape}")
    if spec.kind == "linear":
        return a @ b.T
    d2 = (a * a).sum(axis=1)[:, None] - 2.0 * (a @ b.T) + (b * b).sum(axis=1)[None, :]
    np.maximum(d2, 0.0, out=d2)  # roundoff can drive tiny distances negative
    return np.exp(-spec.gamma * d2)


def one_hot(labels: Sequence[Label]) -> np.ndarray:
    t = np.zeros((len(labels), 3))
    for i, label in enumerate(labels):
        t[i, int(label)] = 1.0
    return t


def class_count_map(labels: Sequence[Label]) -> dict[Label, int]:
    return {lab: sum(1 for v in labels if v == lab) for lab in LABELS}


def minority_weights(labels: Sequence[Label]) -> np.ndarray:
    """Per-instance weights 1/n_class, rescaled to mean 1.

    Uniform class counts therefore give all-ones, and the weighted
    variants collapse to their unweighted counterparts.
    """
    counts = class_count_map(labels)
    w = np.array([1.0 / counts[v] for v in labels])
    return w / w.mean()


def _check_training_inputs(k: np.ndarray, labels: Sequence[Label]) -> None:
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DataError(f"training kernel must be square, got {k.shape}")
    if k.shape[0] != len(labels):
        raise DataError(f"kernel rows {k.shape[0]} vs {len(labels)} labels")
    if len({int(v) for v in labels}) < 2:
        raise DataError("training labels must cover at least 2 classes")


def fit_kelm(
    k: np.ndarray,
    labels: Sequence[Label],
    c_reg: float,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Kernel ELM coefficients: solve (I/C + K) beta = T.

    With per-instance weights the system (I/C + W K) beta = W T is solved
    in the symmetrized form (W^-1/C + K) beta = T, which keeps a
    symmetric positive-definite matrix for the solver.
    """
    k = np.asarray(k, dtype=np.float64)
    _check_training_inputs(k, labels)
    if c_reg <= 0:
        raise ConfigError(f"C_reg must be positive, got {c_reg}")
    n = k.shape[0]
    t = one_hot(labels)
    if weights is None:
        lhs = k + np.eye(n) / c_reg
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n,):
            raise DataError(f"weights shape {weights.shape} vs {n} instances")
        if (weights <= 0).any():
            raise DataError("instance weights must be positive")
        lhs = k + np.diag(1.0 / (weights * c_reg))
    try:
        return scipy.linalg.solve(lhs, t, assume_a="sym")
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"ELM system is singular despite regularization: {exc}") from exc


def _center_train_kernel(k: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    col_means = k.mean(axis=0)
    all_mean = float(k.mean())
    kc = k - col_means[None, :] - col_means[:, None] + all_mean
    return kc, col_means, all_mean


def center_test_kernel(kt: np.ndarray, col_means: np.ndarray, all_mean: float) -> np.ndarray:
    return kt - kt.mean(axis=1, keepdims=True) - col_means[None, :] + all_mean


def fit_kpls(
    k: np.ndarray,
    labels: Sequence[Label],
    l_components: int,
    weights: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Kernel PLS regression coefficients against one-hot targets.

    Latent components come from NIPALS iteration on the doubly-centered
    kernel with deflation after every component; the returned pieces are
    (alpha, kernel column means, kernel grand mean, target offsets) so a
    prediction is centered-test-kernel @ alpha + offsets. Weighted
    variant multiplies target rows by the weights before centering.
    Extraction stops early if the target residual is exhausted.
    """
    k = np.asarray(k, dtype=np.float64)
    _check_training_inputs(k, labels)
    n = k.shape[0]
    if not 1 <= l_components < n:
        raise ConfigError(f"L_components must be in [1, {n - 1}], got {l_components}")
    y = one_hot(labels)
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n,):
            raise DataError(f"weights shape {weights.shape} vs {n} instances")
        y = y * weights[:, None]
    y_offsets = y.mean(axis=0)
    yc = y - y_offsets
    kc, col_means, all_mean = _center_train_kernel(k)

    k_res = kc.copy()
    y_res = yc.copy()
    t_mat = np.zeros((n, l_components))
    u_mat = np.zeros((n, l_components))
    extracted = 0
    for comp in range(l_components):
        col_norms = (y_res**2).sum(axis=0)
        if col_norms.max() < 1e-24:
            break
        u = y_res[:, int(np.argmax(col_norms))].copy()
        t_old = np.zeros(n)
        for _ in range(KPLS_MAX_NIPALS_ITER):
            t = k_res @ u
            norm = np.linalg.norm(t)
            if norm < 1e-24:
                raise NumericalError(f"KPLS component {comp + 1}: kernel residual collapsed")
            t /= norm
            c = y_res.T @ t
            u = y_res @ c
            u_norm = np.linalg.norm(u)
            if u_norm > 0:
                u /= u_norm
            if np.linalg.norm(t - t_old) < KPLS_NIPALS_TOL:
                break
            t_old = t
        else:
            raise NumericalError(
                f"KPLS component {comp + 1} did not converge in {KPLS_MAX_NIPALS_ITER} iterations"
            )
        t_mat[:, comp] = t
        u_mat[:, comp] = u
        proj = np.eye(n) - np.outer(t, t)
        k_res = proj @ k_res @ proj
        y_res = y_res - np.outer(t, t @ y_res)
        extracted += 1
    if extracted == 0:
        raise NumericalError("KPLS extracted no components (degenerate targets)")
    t_mat = t_mat[:, :extracted]
    u_mat = u_mat[:, :extracted]
    m = t_mat.T @ kc @ u_mat
    try:
        inner = scipy.linalg.solve(m, t_mat.T @ yc)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"KPLS projection system is singular: {exc}") from exc
    alpha = u_mat @ inner
    return alpha, col_means, all_mean, y_offsets


def fit_ridge_ovr(
    rows: np.ndarray, labels: Sequence[Label], l2: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Primal regularized least squares, one column per class.

    Returns (weight matrix, feature offsets, target offsets).
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] != len(labels):
        raise DataError(f"{rows.shape[0]} rows vs {len(labels)} labels")
    if len({int(v) for v in labels}) < 2:
        raise DataError("training labels must cover at least 2 classes")
    if l2 < 0:
        raise ConfigError(f"l2 must be non-negative, got {l2}")
    x_mean = rows.mean(axis=0)
    xc = rows - x_mean
    y = one_hot(labels)
    y_offsets = y.mean(axis=0)
    yc = y - y_offsets
    lhs = xc.T @ xc + l2 * np.eye(rows.shape[1])
    try:
        w = scipy.linalg.solve(lhs, xc.T @ yc, assume_a="sym")
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"ridge system is singular: {exc}") from exc
    return w, x_mean, y_offsets


@dataclasses.dataclass
class TrainedModel:
    kind: str
    kernel: KernelSpec | None
    support: np.ndarray | None
    coefficients: np.ndarray
    classes: tuple[Label, ...]
    standardizer: Standardizer
    hyperparams: dict[str, float]
    class_counts: dict[Label, int]
    extras: dict[str, np.ndarray] = dataclasses.field(default_factory=dict)


@dataclasses.dataclass
class PredictionSet:
    """Per-story labels plus the raw per-class decision scores.

    For classifier outputs the label is the score argmax (ordinal
    tie-break); rule-based fusion may overrule the argmax, keeping the
    averaged scores as informational only.
    """

    story_ids: list[str]
    labels: list[Label]
    scores: np.ndarray
    source: str

    def __post_init__(self) -> None:
        self.scores = np.asarray(self.scores, dtype=np.float64)
        n = len(self.story_ids)
        if len(self.labels) != n:
            raise DataError(f"{len(self.labels)} labels vs {n} story ids")
        if self.scores.shape != (n, 3):
            raise DataError(f"scores must be ({n}, 3), got {self.scores.shape}")

    def __len__(self) -> int:
        return len(self.story_ids)


def scores_to_labels(scores: np.ndarray, class_counts: dict[Label, int] | None) -> list[Label]:
    """Row-wise argmax with the ordinal tie-break on exact score ties."""
    out = []
    for row in np.asarray(scores, dtype=np.float64):
        top = row.max()
        tied = {lab for lab in LABELS if row[int(lab)] == top}
        out.append(break_tie(tied, class_counts))
    return out


def fit_classifier(
    kind: str,
    rows: np.ndarray,
    labels: Sequence[Label],
    kernel: KernelSpec | None = None,
    hyperparams: dict[str, float] | None = None,
    standardize: bool = True,
) -> TrainedModel:
    """Standardize, build the kernel, and dispatch on the model kind.

    Hyper-parameter keys: C_reg (kelm/wkelm), L_components (kpls/wkpls),
    l2 (ridge-ovr). The weighted kinds derive minority weights from the
    training labels.
    """
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown classifier kind {kind!r} (choose from {MODEL_KINDS})")
    hp = dict(hyperparams or {})
    rows = np.asarray(rows, dtype=np.float64)
    labels = [Label(int(v)) for v in labels]
    if standardize:
        stats = standardize_fit(rows)
    else:
        stats = Standardizer(np.zeros(rows.shape[1]), np.ones(rows.shape[1]))
    x = standardize_apply(stats, rows)
    counts = class_count_map(labels)
    extras: dict[str, np.ndarray] = {}

    if kind == "ridge-ovr":
        w, x_mean, y_offsets = fit_ridge_ovr(x, labels, hp.get("l2", 1e-6))
        extras = {"x_mean": x_mean, "y_offsets": y_offsets}
        return TrainedModel(kind, None, None, w, LABELS, stats, hp, counts, extras)

    if kernel is None:
        kernel = KernelSpec("linear")
    k = gram(kernel, x, x)
    weights = minority_weights(labels) if kind in ("wkelm", "wkpls") else None
    if kind in ("kelm", "wkelm"):
        beta = fit_kelm(k, labels, hp.get("C_reg", 1.0), weights)
        return TrainedModel(kind, kernel, x, beta, LABELS, stats, hp, counts, extras)
    alpha, col_means, all_mean, y_offsets = fit_kpls(
        k, labels, int(hp.get("L_components", 2)), weights
    )
    extras = {
        "k_col_means": col_means,
        "k_all_mean": np.array([all_mean]),
        "y_offsets": y_offsets,
    }
    return TrainedModel(kind, kernel, x, alpha, LABELS, stats, hp, counts, extras)


def predict(model: TrainedModel, rows: np.ndarray, story_ids: Sequence[str]) -> PredictionSet:
    """Score rows with a trained model and pick labels by argmax."""
    rows = np.asarray(rows, dtype=np.float64)
    if len(story_ids) != rows.shape[0]:
        raise DataError(f"{rows.shape[0]} rows vs {len(story_ids)} story ids")
    x = standardize_apply(model.standardizer, rows)
    if model.kind == "ridge-ovr":
        scores = (x - model.extras["x_mean"]) @ model.coefficients + model.extras["y_offsets"]
    elif model.kind in ("kelm", "wkelm"):
        kt = gram(model.kernel, x, model.support)
        scores = kt @ model.coefficients
    else:
        kt = gram(model.kernel, x, model.support)
        ktc = center_test_kernel(
            kt, model.extras["k_col_means"], float(model.extras["k_all_mean"][0])
        )
        scores = ktc @ model.coefficients + model.extras["y_offsets"]
    labels = scores_to_labels(scores, model.class_counts)
    descriptor = model.kind if model.kernel is None else f"{model.kind}-{model.kernel.kind}"
    return PredictionSet(list(story_ids), labels, scores, descriptor)


PREDICTION_FIELDS = ["story_id", "label", "score_L", "score_M", "score_H", "source"]


def save_predictions(path: str | Path, pset: PredictionSet) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTION_FIELDS)
        for i, sid in enumerate(pset.story_ids):
            writer.writerow(
                [
                    sid,
                    pset.labels[i].name,
                    f"{pset.scores[i, 0]:.10g}",
                    f"{pset.scores[i, 1]:.10g}",
                    f"{pset.scores[i, 2]:.10g}",
                    pset.source,
                ]
            )


def load_predictions(path: str | Path) -> PredictionSet:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty prediction file") from None
        if header != PREDICTION_FIELDS:
            raise DataError(f"{path}: bad header {header!r}")
        ids: list[str] = []
        labels: list[Label] = []
        scores: list[list[float]] = []
        source = ""
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise DataError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            ids.append(row[0])
            labels.append(Label.from_token(row[1]))
            try:
                scores.append([float(row[2]), float(row[3]), float(row[4])])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric score") from None
            source = row[5]
    if not ids:
        raise DataError(f"{path}: no prediction rows")
    return PredictionSet(ids, labels, np.array(scores), source)
