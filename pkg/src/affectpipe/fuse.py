"""Decision-level fusion of prediction sets.

Three combiners: the ordinal two-set rule (agreement, opposite-extremes
to M, minority override, else the majority-favoring set), majority voting
with minority-aware tie-breaks, and weighted mixing of per-class
z-normalized scores. Rule-fused scores are input means, informational
only: the labels come from the rules, not from an argmax.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
from collections.abc import Sequence

import numpy as np

from .corpus import Corpus
from .errors import ConfigError, DataError
from .evalcv import ConfusionMatrix, uar
from .labels import EXTREMES, Label, break_tie, minority_set
from .learn import PredictionSet, scores_to_labels

log = logging.getLogger(__name__)


@dataclasses.dataclass
class FusionContext:
    """Training-distribution facts the fusion rules condition on."""

    minority_set: set[Label]
    class_counts: dict[Label, int]
    dev_confusions: dict[str, ConfusionMatrix] | None = None

    def __post_init__(self) -> None:
        if self.class_counts:
            top = max(self.class_counts.get(lab, 0) for lab in Label)
            for lab in self.minority_set:
                if self.class_counts.get(lab, 0) >= top:
                    raise DataError(
                        f"label {lab.name} is in minority_set but its count is not "
                        "strictly below the maximum class count"
                    )

    @classmethod
    def from_counts(cls, class_counts: dict[Label, int]) -> "FusionContext":
        return cls(minority_set(class_counts), dict(class_counts))

    @classmethod
    def for_task(cls, corpus: Corpus, task: str) -> "FusionContext":
        return cls(set(corpus.minority_sets[task]), dict(corpus.class_counts[task]))


def _check_aligned(sets: Sequence[PredictionSet]) -> None:
    ids = sets[0].story_ids
    for other in sets[1:]:
        if other.story_ids != ids:
            raise DataError(
                f"prediction sets are misaligned: {other.source!r} does not list the "
                f"same stories in the same order as {sets[0].source!r}"
            )


def _mean_scores(sets: Sequence[PredictionSet]) -> np.ndarray:
    return np.mean([s.scores for s in sets], axis=0)


def fuse_two(p: PredictionSet, s: PredictionSet, ctx: FusionContext) -> PredictionSet:
    """Ordinal rule fusion of a majority-favoring set P and a minority-
    favoring set S.

    Per story: agreement keeps the label; opposite extremes meet at M; a
    minority-class S label overrides; otherwise P wins.
    """
    _check_aligned([p, s])
    labels: list[Label] = []
    for p_i, s_i in zip(p.labels, s.labels):
        if p_i == s_i:
            labels.append(p_i)
        elif {p_i, s_i} == set(EXTREMES):
            labels.append(Label.M)
        elif s_i in ctx.minority_set:
            labels.append(s_i)
        else:
            labels.append(p_i)
    return PredictionSet(
        list(p.story_ids), labels, _mean_scores([p, s]), f"fuse_two({p.source}+{s.source})"
    )


def majority_vote(sets: Sequence[PredictionSet], ctx: FusionContext) -> PredictionSet:
    """Plurality vote over three or more aligned prediction sets.

    Full three-way disagreement of exactly three voters yields M. Other
    ties prefer the smallest training-count label among the tied ones,
    then fall back to the ordinal tie-break (M, rarer extreme, L).
    """
    if len(sets) < 3:
        raise DataError(f"majority_vote needs at least 3 sets, got {len(sets)} (use fuse_two)")
    _check_aligned(sets)
    labels: list[Label] = []
    for i in range(len(sets[0])):
        votes = [ps.labels[i] for ps in sets]
        tally = {lab: votes.count(lab) for lab in Label if votes.count(lab) > 0}
        top = max(tally.values())
        tied = {lab for lab, n in tally.items() if n == top}
        if len(tied) == 1:
            labels.append(next(iter(tied)))
        elif len(sets) == 3 and len(tied) == 3:
            labels.append(Label.M)
        else:
            lowest = min(ctx.class_counts.get(lab, 0) for lab in tied)
            rarest = {lab for lab in tied if ctx.class_counts.get(lab, 0) == lowest}
            labels.append(next(iter(rarest)) if len(rarest) == 1 else break_tie(rarest, ctx.class_counts))
    return PredictionSet(
        list(sets[0].story_ids),
        labels,
        _mean_scores(sets),
        "majority_vote(" + "+".join(ps.source for ps in sets) + ")",
    )


def _znorm_columns(scores: np.ndarray) -> np.ndarray:
    mean = scores.mean(axis=0)
    std = scores.std(axis=0)
    std[std == 0] = 1.0
    return (scores - mean) / std


def weighted_score_fusion(
    sets: Sequence[PredictionSet],
    weights: Sequence[float],
    ctx: FusionContext | None = None,
) -> PredictionSet:
    """Mix per-class z-normalized scores with simplex weights.

    A weight vector with a 1 returns that set's labels and raw scores
    unchanged (z-normalization could otherwise reorder an argmax). With a
    context, score ties break toward M then the rarer extreme; without
    one, toward M then L.
    """
    if len(sets) == 0:
        raise ConfigError("weighted_score_fusion needs at least one prediction set")
    if len(weights) != len(sets):
        raise ConfigError(f"{len(weights)} weights vs {len(sets)} prediction sets")
    w = np.asarray(weights, dtype=np.float64)
    if (w < 0).any():
        raise ConfigError("fusion weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ConfigError(f"fusion weights must sum to 1, got {w.sum()!r}")
    _check_aligned(sets)
    source = "weighted(" + "+".join(f"{ps.source}:{wi:g}" for ps, wi in zip(sets, w)) + ")"
    hot = np.flatnonzero(w == 1.0)
    if hot.size == 1:
        chosen = sets[int(hot[0])]
        return PredictionSet(list(chosen.story_ids), list(chosen.labels), chosen.scores.copy(), source)
    mixed = np.zeros_like(sets[0].scores)
    for ps, wi in zip(sets, w):
        if wi > 0:
            mixed += wi * _znorm_columns(ps.scores)
    counts = ctx.class_counts if ctx is not None else None
    labels = scores_to_labels(mixed, counts)
    return PredictionSet(list(sets[0].story_ids), labels, mixed, source)


def search_fusion_weights(
    sets: Sequence[PredictionSet],
    truth: Sequence[Label],
    step: float = 0.1,
    ctx: FusionContext | None = None,
) -> tuple[float, ...]:
    """Grid-search simplex weights maximizing UAR against the given truth.

    The grid holds every non-negative integer combination of `step` that
    sums to one. Ties prefer the most uniform vector, then the
    lexicographically smallest.
    """
    if len(sets) == 0:
        raise ConfigError("search_fusion_weights needs at least one prediction set")
    k = round(1.0 / step)
    if k < 1 or abs(k * step - 1.0) > 1e-9:
        raise ConfigError(f"step {step} does not divide 1")
    m = len(sets)
    best: tuple[float, ...] | None = None
    best_uar = -1.0
    best_spread = 0
    # parts: integer compositions of k into m bins, lexicographically ascending
    for cuts in itertools.combinations_with_replacement(range(k + 1), m - 1):
        bounds = (0, *cuts, k)
        parts = tuple(bounds[i + 1] - bounds[i] for i in range(m))
        weights = tuple(p / k for p in parts)
        fused = weighted_score_fusion(sets, weights, ctx)
        score = uar(truth, fused.labels)
        spread = sum((m * p - k) ** 2 for p in parts)  # 0 iff perfectly uniform
        if score > best_uar or (score == best_uar and spread < best_spread):
            best_uar = score
            best_spread = spread
            best = weights
    assert best is not None
    return best


def designate_by_minority_recall(
    a: PredictionSet,
    b: PredictionSet,
    truth: Sequence[Label],
    ctx: FusionContext,
) -> tuple[PredictionSet, PredictionSet]:
    """Heuristic (P, S) designation: the set recalling minority classes
    better becomes S. Ties designate `b` as S."""
    recall_a = ConfusionMatrix.from_pairs(truth, a.labels).mean_recall(sorted(ctx.minority_set))
    recall_b = ConfusionMatrix.from_pairs(truth, b.labels).mean_recall(sorted(ctx.minority_set))
    if recall_a > recall_b:
        return b, a
    return a, b
