"""Metrics, speaker-disjoint fold planning, and (nested) cross-validation.

Folds are planned at speaker granularity so no speaker's stories ever
straddle a train/test boundary. The CV runners are generic over fit and
predict callables; the pipeline module supplies the real stages.
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Callable, Sequence
from typing import TYPE_CHECKING

import numpy as np

from .corpus import Corpus, StoryRecord
from .errors import AffectPipeError, DataError
from .labels import LABELS, Label

if TYPE_CHECKING:
    from .learn import PredictionSet

log = logging.getLogger(__name__)


def uar(truth: Sequence[int], pred: Sequence[int]) -> float:
    """Unweighted average recall: mean per-class recall of classes in truth.

    Classes absent from the truth vector do not contribute, so tiny
    fixtures with a missing class still score cleanly.
    """
    if len(truth) != len(pred):
        raise DataError(f"uar: {len(truth)} truth vs {len(pred)} predicted labels")
    if len(truth) == 0:
        raise DataError("uar: empty label vectors")
    t = np.array([int(v) for v in truth])
    p = np.array([int(v) for v in pred])
    recalls = [float(np.mean(p[t == c] == c)) for c in np.unique(t)]
    return float(np.mean(recalls))


@dataclasses.dataclass
class ConfusionMatrix:
    """3x3 counts; rows are truth L/M/H, columns are predictions."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (3, 3):
            raise DataError(f"confusion matrix must be 3x3, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise DataError("confusion matrix entries must be non-negative")

    @classmethod
    def from_pairs(cls, truth: Sequence[int], pred: Sequence[int]) -> "ConfusionMatrix":
        counts = np.zeros((3, 3), dtype=np.int64)
        for t, p in zip(truth, pred, strict=True):
            counts[int(t), int(p)] += 1
        return cls(counts)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0

    def recalls(self) -> dict[Label, float]:
        out = {}
        for label in LABELS:
            row = self.counts[int(label)]
            if row.sum() > 0:
                out[label] = float(row[int(label)]) / float(row.sum())
        return out

    def uar(self) -> float:
        recalls = self.recalls()
        if not recalls:
            raise DataError("confusion matrix is empty")
        return float(np.mean(list(recalls.values())))

    def mean_recall(self, classes: Sequence[Label]) -> float:
        recalls = self.recalls()
        hit = [recalls[c] for c in classes if c in recalls]
        return float(np.mean(hit)) if hit else 0.0

    def render(self) -> str:
        header = "truth\\pred   L     M     H"
        rows = [
            f"{label.name:>4}      {self.counts[i, 0]:5d} {self.counts[i, 1]:5d} {self.counts[i, 2]:5d}"
            for i, label in enumerate(LABELS)
        ]
        return "\n".join([header, *rows])


@dataclasses.dataclass
class FoldPlan:
    n_folds: int
    assignment: dict[str, int]
    seed: int

    def fold_of(self, speaker_id: str) -> int:
        try:
            return self.assignment[speaker_id]
        except KeyError:
            raise DataError(f"speaker {speaker_id!r} is not in the fold plan") from None

    def story_folds(self, records: Sequence[StoryRecord]) -> list[int]:
        return [self.fold_of(r.speaker_id) for r in records]


def plan_folds(corpus: Corpus, n: int, task: str, seed: int) -> FoldPlan:
    """Seeded greedy stratified speaker assignment into n folds.

    Speakers are shuffled, ordered by descending labeled-story count, and
    assigned one by one: always into a currently-smallest fold (so fold
    sizes never differ by more than one speaker), among those into the
    fold whose class counts are furthest below their proportional target.
    """
    if n < 2:
        raise DataError(f"need at least 2 folds, got {n}")
    if task not in ("valence", "arousal"):
        raise DataError(f"unknown task {task!r}")
    per_speaker: dict[str, np.ndarray] = {}
    for record in corpus.stories:
        label = getattr(record, task)
        if label is None:
            continue
        counts = per_speaker.setdefault(record.speaker_id, np.zeros(3, dtype=np.int64))
        counts[int(label)] += 1
    if len(per_speaker) < n:
        raise DataError(f"{len(per_speaker)} labeled speakers cannot fill {n} folds")

    rng = np.random.default_rng(seed)
    speakers = sorted(per_speaker)
    rng.shuffle(speakers)
    speakers.sort(key=lambda s: -int(per_speaker[s].sum()))  # stable: keeps shuffle among ties

    total = np.sum([per_speaker[s] for s in speakers], axis=0).astype(np.float64)
    target = total / n
    fold_counts = np.zeros((n, 3))
    fold_sizes = np.zeros(n, dtype=np.int64)
    assignment: dict[str, int] = {}
    for speaker in speakers:
        counts = per_speaker[speaker]
        smallest = np.flatnonzero(fold_sizes == fold_sizes.min())
        need = [(target - fold_counts[f]) @ counts for f in smallest]
        fold = int(smallest[int(np.argmax(need))])
        assignment[speaker] = fold
        fold_counts[fold] += counts
        fold_sizes[fold] += 1
    return FoldPlan(n, assignment, seed)


class AuditingLabelStore:
    """Label access with an audit trail, for protocol tests.

    Every read records (story_id, phase); nested CV sets the phase around
    its stages so a test can assert that no outer-test label was read
    before that fold's scoring phase.
    """

    def __init__(self, corpus: Corpus, task: str) -> None:
        self.task = task
        self._labels = {
            r.story_id: getattr(r, task)
            for r in corpus.stories
            if getattr(r, task) is not None
        }
        self.phase = "init"
        self.reads: list[tuple[str, str]] = []

    def get(self, story_id: str) -> Label:
        self.reads.append((story_id, self.phase))
        try:
            return self._labels[story_id]
        except KeyError:
            raise DataError(f"no {self.task} label stored for story {story_id!r}") from None

    def reads_before(self, phase_prefix: str, story_ids: Sequence[str]) -> list[tuple[str, str]]:
        """All reads of the given stories whose phase lacks the prefix."""
        wanted = set(story_ids)
        return [
            (sid, phase)
            for sid, phase in self.reads
            if sid in wanted and not phase.startswith(phase_prefix)
        ]


FitFn = Callable[[list[StoryRecord]], object]
PredictFn = Callable[[object, list[StoryRecord]], "PredictionSet"]


@dataclasses.dataclass
class FoldResult:
    fold: int
    predictions: "PredictionSet"
    truth: list[Label]
    uar: float
    confusion: ConfusionMatrix
    model: object


@dataclasses.dataclass
class CvResult:
    task: str
    fold_results: list[FoldResult]
    overall_uar: float
    overall_confusion: ConfusionMatrix

    @property
    def models(self) -> list[object]:
        return [fr.model for fr in self.fold_results]

    def per_fold_uars(self) -> list[float]:
        return [fr.uar for fr in self.fold_results]


def _labeled(corpus: Corpus, task: str) -> list[StoryRecord]:
    return [r for r in corpus.stories if getattr(r, task) is not None]


def run_cv(
    corpus: Corpus,
    plan: FoldPlan,
    task: str,
    fit_fn: FitFn,
    predict_fn: PredictFn,
    label_store: AuditingLabelStore | None = None,
) -> CvResult:
    """N-fold CV: fit on each fold's complement, predict the held-out fold.

    Every stage the caller closes over (feature fits, classifiers) must
    train inside fit_fn on the given records only; this runner guarantees
    speaker-disjoint splits and aggregates out-of-fold predictions, which
    cover every labeled story exactly once.
    """
    stories = _labeled(corpus, task)
    if not stories:
        raise DataError(f"no stories labeled for {task}")
    for record in stories:
        plan.fold_of(record.speaker_id)  # raises on an unplanned speaker

    def truth_of(record: StoryRecord) -> Label:
        if label_store is not None:
            return label_store.get(record.story_id)
        return getattr(record, task)

    fold_results = []
    all_truth: list[Label] = []
    all_pred: list[Label] = []
    for fold in range(plan.n_folds):
        test = [r for r in stories if plan.fold_of(r.speaker_id) == fold]
        train = [r for r in stories if plan.fold_of(r.speaker_id) != fold]
        if not test:
            continue
        if not train:
            raise DataError(f"fold {fold}: empty training portion")
        try:
            model = fit_fn(train)
            predictions = predict_fn(model, test)
        except AffectPipeError as exc:
            raise type(exc)(f"fold {fold} ({task}): {exc}") from exc
        if list(predictions.story_ids) != [r.story_id for r in test]:
            raise DataError(f"fold {fold}: prediction ids misaligned with test stories")
        truth = [truth_of(r) for r in test]
        confusion = ConfusionMatrix.from_pairs(truth, predictions.labels)
        fold_results.append(
            FoldResult(fold, predictions, truth, uar(truth, predictions.labels), confusion, model)
        )
        all_truth.extend(truth)
        all_pred.extend(predictions.labels)
    overall = uar(all_truth, all_pred)
    return CvResult(task, fold_results, overall, ConfusionMatrix.from_pairs(all_truth, all_pred))


@dataclasses.dataclass
class NestedFoldResult:
    fold: int
    chosen_params: dict
    inner_uar: float
    outer_uar: float
    predictions: "PredictionSet"
    confusion: ConfusionMatrix


@dataclasses.dataclass
class NestedCvResult:
    task: str
    fold_results: list[NestedFoldResult]
    mean_uar: float
    overall_uar: float
    overall_confusion: ConfusionMatrix


def run_nested_cv(
    corpus: Corpus,
    task: str,
    outer_n: int,
    inner_n: int,
    seed: int,
    grid: Sequence[dict],
    fit_fn: Callable[[dict, list[StoryRecord]], object],
    predict_fn: PredictFn,
    label_store: AuditingLabelStore | None = None,
) -> NestedCvResult:
    """Nested CV: inner folds pick the grid point, outer folds estimate UAR.

    Hyper-parameter selection sees only the outer-training speakers; the
    winning grid point (ties to the earlier entry) is refit on the full
    outer-training portion and scored once on the outer test fold.
    """
    if not grid:
        raise DataError("nested CV needs a non-empty hyper-parameter grid")
    outer_plan = plan_folds(corpus, outer_n, task, seed)
    stories = _labeled(corpus, task)

    def truth_of(record: StoryRecord) -> Label:
        if label_store is not None:
            return label_store.get(record.story_id)
        return getattr(record, task)

    fold_results = []
    all_truth: list[Label] = []
    all_pred: list[Label] = []
    for fold in range(outer_n):
        test = [r for r in stories if outer_plan.fold_of(r.speaker_id) == fold]
        train = [r for r in stories if outer_plan.fold_of(r.speaker_id) != fold]
        if not test or not train:
            continue
        if label_store is not None:
            label_store.phase = f"outer{fold}:inner"
        inner_corpus = corpus.subset({r.story_id for r in train})
        inner_plan = plan_folds(inner_corpus, inner_n, task, seed + 1000 * (fold + 1))
        best_params = None
        best_inner = -1.0
        for params in grid:
            result = run_cv(
                inner_corpus,
                inner_plan,
                task,
                lambda records, p=params: fit_fn(p, records),
                predict_fn,
                label_store=label_store,
            )
            if result.overall_uar > best_inner:
                best_inner = result.overall_uar
                best_params = params
        assert best_params is not None
        if label_store is not None:
            label_store.phase = f"outer{fold}:refit"
        try:
            model = fit_fn(best_params, train)
            predictions = predict_fn(model, test)
        except AffectPipeError as exc:
            raise type(exc)(f"outer fold {fold} ({task}): {exc}") from exc
        if list(predictions.story_ids) != [r.story_id for r in test]:
            raise DataError(f"outer fold {fold}: prediction ids misaligned")
        if label_store is not None:
            label_store.phase = f"outer{fold}:score"
        truth = [truth_of(r) for r in test]
        confusion = ConfusionMatrix.from_pairs(truth, predictions.labels)
        fold_results.append(
            NestedFoldResult(
                fold, dict(best_params), best_inner, uar(truth, predictions.labels),
                predictions, confusion,
            )
        )
        all_truth.extend(truth)
        all_pred.extend(predictions.labels)
    if not fold_results:
        raise DataError("nested CV produced no scored folds")
    mean_uar = float(np.mean([fr.outer_uar for fr in fold_results]))
    overall = uar(all_truth, all_pred)
    return NestedCvResult(
        task, fold_results, mean_uar, overall, ConfusionMatrix.from_pairs(all_truth, all_pred)
    )
