"""Brute-force dictionary-feature subset selection.

Every subset of the candidate statistics up to a maximum cardinality is
scored by cross-validated UAR; the best subset wins, with deterministic
tie-breaking (smaller subset first, then lexicographic feature names).
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Sequence

import numpy as np

from ..errors import DataError
from ..evalcv import uar

# Subset reported as optimal on the reference corpus: SentiWS min, max and
# negative count plus SentiWordNet maximum-positive and sum-of-negative.
REFERENCE_DICTIONARY_SUBSET = (
    "sentiws.max",
    "sentiws.min",
    "sentiws.n_neg",
    "sentiwordnet.neg_sum",
    "sentiwordnet.pos_max",
)

Scorer = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _nearest_centroid(train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray) -> np.ndarray:
    classes = np.unique(train_y)
    centroids = np.stack([train_x[train_y == c].mean(axis=0) for c in classes])
    d2 = ((test_x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return classes[np.argmin(d2, axis=1)]


def select_dictionary_features(
    rows: np.ndarray,
    feature_names: Sequence[str],
    labels: Sequence[int],
    fold_indices: Sequence[int],
    max_cardinality: int = 6,
    scorer: Scorer | None = None,
) -> tuple[str, ...]:
    """Pick the feature-name subset maximizing out-of-fold UAR.

    `rows` holds one story per row, one candidate statistic per column;
    `fold_indices` assigns each story to a CV fold. Each candidate subset
    is scored by training the scorer (default: nearest class centroid on
    fold-standardized columns) on every fold's complement and pooling the
    held-out predictions. Enumeration runs in (cardinality, name) order,
    and only strictly better scores replace the incumbent, which realizes
    the documented tie-break.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise DataError("candidate feature rows must be 2-D")
    n_stories, n_features = rows.shape
    if n_features == 0 or len(feature_names) == 0:
        raise DataError("empty candidate feature pool")
    if len(feature_names) != n_features:
        raise DataError(f"{n_features} columns vs {len(feature_names)} feature names")
    if len(labels) != n_stories or len(fold_indices) != n_stories:
        raise DataError("labels/fold_indices length must match the row count")
    y = np.array([int(v) for v in labels])
    folds = np.asarray(fold_indices)
    fold_ids = np.unique(folds)
    if len(fold_ids) < 2:
        raise DataError("subset selection needs at least 2 folds")
    if max_cardinality < 1:
        raise DataError("max_cardinality must be >= 1")

    # Standardize per fold on the training portion only; constant columns
    # pass through so degenerate statistics cannot blow up distances.
    split: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
    for f in fold_ids:
        te = folds == f
        tr = ~te
        mu = rows[tr].mean(axis=0)
        sd = rows[tr].std(axis=0)
        sd[sd == 0] = 1.0
        split.append(((rows[tr] - mu) / sd, y[tr], (rows[te] - mu) / sd, y[te]))

    predict = scorer if scorer is not None else _nearest_centroid
    order = sorted(range(n_features), key=lambda j: feature_names[j])
    best_names: tuple[str, ...] | None = None
    best_score = -1.0
    for k in range(1, min(max_cardinality, n_features) + 1):
        for combo in itertools.combinations(order, k):
            cols = list(combo)
            truth: list[int] = []
            pred: list[int] = []
            for train_x, train_y, test_x, test_y in split:
                out = predict(train_x[:, cols], train_y, test_x[:, cols])
                truth.extend(test_y.tolist())
                pred.extend(np.asarray(out).tolist())
            score = uar(truth, pred)
            if score > best_score:
                best_score = score
                best_names = tuple(feature_names[j] for j in combo)
    assert best_names is not None
    return best_names
