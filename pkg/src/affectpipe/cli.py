"""Command-line entry points for the pipeline.

Subcommands: synth, extract, fv fit|encode, cv, nested,
fuse two|vote|weighted, report. Every run-producing command writes its
CSV artifacts deterministically (same config + seed give byte-identical
files) and a human-readable report.txt that additionally records the
config hash, the seed, and wall-clock stage timings. Exit codes: 0
success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .corpus import Corpus, load_manifest
from .errors import AffectPipeError, ConfigError, DataError, NumericalError
from .evalcv import AuditingLabelStore, ConfusionMatrix
from .fuse import (
    FusionContext,
    fuse_two,
    majority_vote,
    search_fusion_weights,
    weighted_score_fusion,
)
from .labels import LABELS, Label
from .learn import PREDICTION_FIELDS, PredictionSet, load_predictions, save_predictions
from .modelio import load_pca_gmm, save_pca_gmm
from .pipeline import (
    WORKERS_ENV,
    FeatureAssembler,
    load_pipeline_corpus,
    run_pipeline_cv,
    run_pipeline_nested,
)
from .synth import generate_corpus

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# small shared helpers

class StageClock:
    """Accumulates named wall-clock timings for the run report."""

    def __init__(self) -> None:
        self.stages: list[tuple[str, float]] = []
        self._t0 = time.perf_counter()

    def mark(self, stage: str) -> None:
        now = time.perf_counter()
        self.stages.append((stage, now - self._t0))
        self._t0 = now

    def lines(self) -> list[str]:
        total = sum(seconds for _, seconds in self.stages)
        out = [f"  {stage:<12} {seconds:8.2f} s" for stage, seconds in self.stages]
        out.append(f"  {'total':<12} {total:8.2f} s")
        return out


def _load_validated_config(path: str) -> PipelineConfig:
    cfg = load_config(path)
    cfg.validate_paths()
    return cfg


def _apply_overrides(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    if getattr(args, "seed", None) is not None:
        cfg.cv.seed = args.seed
    if getattr(args, "folds", None) is not None:
        cfg.cv.folds = args.folds
    if getattr(args, "inner_folds", None) is not None:
        cfg.cv.inner_folds = args.inner_folds
    cfg.validate()


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_report(path: Path, title: str, sections: list[str]) -> None:
    body = "\n".join([title, "=" * len(title), "", *sections, ""])
    path.write_text(body, encoding="utf-8")


def _config_header(config_path: str, cfg: PipelineConfig) -> list[str]:
    return [
        f"config:      {config_path}",
        f"config hash: {cfg.config_hash()}",
        f"task:        {cfg.task}",
        f"seed:        {cfg.cv.seed}",
    ]


def _confusion_rows(tag: str, confusion: ConfusionMatrix) -> list[list]:
    rows = []
    for lab in LABELS:
        counts = confusion.counts[int(lab)]
        rows.append([tag, lab.name, *(int(c) for c in counts)])
    return rows


def _merge_predictions(sets: list[PredictionSet]) -> PredictionSet:
    ids = [sid for ps in sets for sid in ps.story_ids]
    labels = [lab for ps in sets for lab in ps.labels]
    scores = np.vstack([ps.scores for ps in sets])
    return PredictionSet(ids, labels, scores, sets[0].source)


def _out_dir(raw: str) -> Path:
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------------
# synth

def cmd_synth(args: argparse.Namespace) -> int:
    clock = StageClock()
    result = generate_corpus(
        Path(args.out),
        seed=args.seed,
        n_speakers=args.speakers,
        stories_per_speaker=args.stories,
    )
    clock.mark("generate")
    n = len(result.corpus.stories)
    print(f"synthetic corpus: {n} stories from {args.speakers} speakers in {result.out_dir}")
    print(f"manifest: {result.manifest}")
    for name, path in sorted(result.configs.items()):
        print(f"config ({name}): {path}")
    for stage, seconds in clock.stages:
        log.info("%s took %.2f s", stage, seconds)
    return 0


# ----------------------------------------------------------------------
# extract

def cmd_extract(args: argparse.Namespace) -> int:
    clock = StageClock()
    cfg = _load_validated_config(args.config)
    corpus = load_pipeline_corpus(cfg)
    out = _out_dir(args.out)
    clock.mark("load")

    assembler = FeatureAssembler(cfg, corpus)
    stories = corpus.stories
    if not stories:
        raise DataError("the corpus has no stories to extract features for")
    # Raw per-story features: the Fisher vectors keep their native
    # 2*K*D dimensionality here (no FV shrink), so downstream tooling
    # sees the full encoding.
    model, rows = assembler.fit_fold_features(stories, fit_fv_pca=False)
    clock.mark("extract")

    features_csv = out / "features.csv"
    table = [
        [record.story_id, *(f"{value:.10g}" for value in row)]
        for record, row in zip(stories, rows)
    ]
    _write_csv(features_csv, ["story_id", *model.feature_names], table)
    clock.mark("write")

    _write_report(
        out / "report.txt",
        "feature extraction report",
        [
            *_config_header(args.config, cfg),
            f"stories:     {len(stories)}",
            f"columns:     {len(model.feature_names)}",
            f"output:      {features_csv}",
            "",
            "stage timings:",
            *clock.lines(),
        ],
    )
    print(f"wrote {len(stories)} rows x {len(model.feature_names)} features to {features_csv}")
    return 0


# ----------------------------------------------------------------------
# fv fit / fv encode

def cmd_fv_fit(args: argparse.Namespace) -> int:
    clock = StageClock()
    cfg = _load_validated_config(args.config)
    if not cfg.acoustic.enabled:
        raise ConfigError("fv fit needs acoustic.enabled = true")
    corpus = load_pipeline_corpus(cfg)
    clock.mark("load")
    assembler = FeatureAssembler(cfg, corpus)
    frame_pca, gmm = assembler.fit_frontend(corpus.stories)
    clock.mark("fit")
    save_pca_gmm(Path(args.out), frame_pca, gmm)
    clock.mark("write")
    print(
        f"fitted frame PCA ({frame_pca.basis.shape[0]} -> "
        f"{frame_pca.n_components} dims) and {gmm.n_components}-component "
        f"GMM on {len(corpus.stories)} stories -> {args.out}"
    )
    for stage, seconds in clock.stages:
        log.info("%s took %.2f s", stage, seconds)
    return 0


def cmd_fv_encode(args: argparse.Namespace) -> int:
    clock = StageClock()
    cfg = _load_validated_config(args.config)
    if not cfg.acoustic.enabled:
        raise ConfigError("fv encode needs acoustic.enabled = true")
    corpus = load_pipeline_corpus(cfg)
    frame_pca, gmm = load_pca_gmm(Path(args.model))
    if frame_pca is None:
        raise DataError(f"{args.model}: container holds no PCA section")
    clock.mark("load")
    assembler = FeatureAssembler(cfg, corpus)
    assembler.prefetch_llds(corpus.stories)
    table = []
    width = None
    for record in corpus.stories:
        fv = assembler.story_fv(frame_pca, gmm, record)
        width = fv.shape[0]
        table.append([record.story_id, *(f"{value:.10g}" for value in fv)])
    clock.mark("encode")
    if width is None:
        raise DataError("the corpus has no stories to encode")
    header = ["story_id", *(f"fv.{i:04d}" for i in range(width))]
    _write_csv(Path(args.out), header, table)
    clock.mark("write")
    print(f"encoded {len(table)} stories x {width} FV dims -> {args.out}")
    return 0


# ----------------------------------------------------------------------
# cv / nested

def cmd_cv(args: argparse.Namespace) -> int:
    clock = StageClock()
    cfg = _load_validated_config(args.config)
    _apply_overrides(cfg, args)
    corpus = load_pipeline_corpus(cfg)
    out = _out_dir(args.out)
    clock.mark("load")

    result, plan = run_pipeline_cv(cfg, corpus=corpus)
    clock.mark("cv")

    for fr in result.fold_results:
        save_predictions(out / f"fold{fr.fold}.predictions.csv", fr.predictions)
    merged = _merge_predictions([fr.predictions for fr in result.fold_results])
    save_predictions(out / "predictions.csv", merged)

    config_hash = cfg.config_hash()
    uar_rows = [
        [cfg.task, fr.fold, len(fr.truth), f"{fr.uar:.6f}", config_hash, cfg.cv.seed]
        for fr in result.fold_results
    ]
    uar_rows.append(
        [cfg.task, "overall", result.overall_confusion.total,
         f"{result.overall_uar:.6f}", config_hash, cfg.cv.seed]
    )
    _write_csv(out / "uar.csv", ["task", "fold", "n", "uar", "config_hash", "seed"], uar_rows)

    confusion_rows = []
    for fr in result.fold_results:
        confusion_rows.extend(_confusion_rows(str(fr.fold), fr.confusion))
    confusion_rows.extend(_confusion_rows("overall", result.overall_confusion))
    _write_csv(
        out / "confusion.csv",
        ["fold", "truth", *(f"pred_{lab.name}" for lab in LABELS)],
        confusion_rows,
    )
    clock.mark("write")

    fold_lines = [
        f"  fold {fr.fold}: n={len(fr.truth):4d}  UAR={fr.uar:.4f}" for fr in result.fold_results
    ]
    _write_report(
        out / "report.txt",
        "cross-validation report",
        [
            *_config_header(args.config, cfg),
            f"folds:       {plan.n_folds} (speaker-disjoint)",
            f"classifier:  {cfg.classifier.kind} ({cfg.classifier.kernel})",
            "",
            "per-fold results:",
            *fold_lines,
            f"  overall: n={result.overall_confusion.total:4d}  UAR={result.overall_uar:.4f}",
            "",
            "overall confusion (rows = truth):",
            result.overall_confusion.render(),
            "",
            "stage timings:",
            *clock.lines(),
        ],
    )
    print(f"{cfg.task} {plan.n_folds}-fold CV: overall UAR {result.overall_uar:.4f} -> {out}")
    return 0


def cmd_nested(args: argparse.Namespace) -> int:
    clock = StageClock()
    cfg = _load_validated_config(args.config)
    _apply_overrides(cfg, args)
    corpus = load_pipeline_corpus(cfg)
    out = _out_dir(args.out)
    clock.mark("load")

    store = AuditingLabelStore(corpus, cfg.task)
    result = run_pipeline_nested(cfg, corpus=corpus, label_store=store)
    clock.mark("nested")

    # A fold's test labels may legitimately be read while other folds
    # treat those stories as training data; leakage is only a read during
    # the fold's own pre-scoring phases (inner selection or refit).
    violations: list[tuple[str, str]] = []
    for fr in result.fold_results:
        early = store.reads_before(f"outer{fr.fold}:score", fr.predictions.story_ids)
        violations.extend(
            (sid, phase) for sid, phase in early if phase.startswith(f"outer{fr.fold}:")
        )

    for fr in result.fold_results:
        save_predictions(out / f"fold{fr.fold}.predictions.csv", fr.predictions)
    merged = _merge_predictions([fr.predictions for fr in result.fold_results])
    save_predictions(out / "predictions.csv", merged)

    config_hash = cfg.config_hash()
    nested_rows = [
        [
            cfg.task,
            fr.fold,
            ";".join(f"{k}={v:g}" for k, v in sorted(fr.chosen_params.items())),
            f"{fr.inner_uar:.6f}",
            f"{fr.outer_uar:.6f}",
            config_hash,
            cfg.cv.seed,
        ]
        for fr in result.fold_results
    ]
    _write_csv(
        out / "nested.csv",
        ["task", "fold", "chosen_params", "inner_uar", "outer_uar", "config_hash", "seed"],
        nested_rows,
    )
    confusion_rows = []
    for fr in result.fold_results:
        confusion_rows.extend(_confusion_rows(str(fr.fold), fr.confusion))
    confusion_rows.extend(_confusion_rows("overall", result.overall_confusion))
    _write_csv(
        out / "confusion.csv",
        ["fold", "truth", *(f"pred_{lab.name}" for lab in LABELS)],
        confusion_rows,
    )
    clock.mark("write")

    fold_lines = [
        f"  fold {fr.fold}: chose {fr.chosen_params}  inner UAR={fr.inner_uar:.4f}  "
        f"outer UAR={fr.outer_uar:.4f}"
        for fr in result.fold_results
    ]
    audit_line = (
        "outer-test label reads before scoring: 0 (clean)"
        if not violations
        else f"outer-test label reads before scoring: {len(violations)} (PROTOCOL VIOLATION)"
    )
    _write_report(
        out / "report.txt",
        "nested cross-validation report",
        [
            *_config_header(args.config, cfg),
            f"outer folds: {cfg.cv.folds}, inner folds: {cfg.cv.inner_folds}",
            f"classifier:  {cfg.classifier.kind} ({cfg.classifier.kernel})",
            audit_line,
            "",
            "per-fold results:",
            *fold_lines,
            f"  mean outer UAR:    {result.mean_uar:.4f}",
            f"  overall (pooled):  {result.overall_uar:.4f}",
            "",
            "overall confusion (rows = truth):",
            result.overall_confusion.render(),
            "",
            "stage timings:",
            *clock.lines(),
        ],
    )
    if violations:
        raise DataError(
            f"nested CV read {len(violations)} outer-test labels before scoring "
            f"(first: story {violations[0][0]!r} during phase {violations[0][1]!r})"
        )
    print(
        f"{cfg.task} nested CV ({cfg.cv.folds}x{cfg.cv.inner_folds}): "
        f"mean outer UAR {result.mean_uar:.4f} -> {out}"
    )
    return 0


# ----------------------------------------------------------------------
# fuse

def _parse_counts(raw: str) -> dict[Label, int]:
    counts: dict[Label, int] = {}
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"--counts entries must look like L=10, got {chunk!r}")
        name, _, value = chunk.partition("=")
        try:
            label = Label.from_token(name.strip())
        except (DataError, ValueError):
            raise ConfigError(f"--counts: unknown label {name.strip()!r}") from None
        try:
            counts[label] = int(value)
        except ValueError:
            raise ConfigError(f"--counts: bad count {value!r} for {label.name}") from None
    if not counts:
        raise ConfigError("--counts did not contain any class counts")
    return counts


def _fusion_inputs(
    args: argparse.Namespace,
) -> tuple[list[PredictionSet], FusionContext | None, dict[str, Label] | None]:
    sets = [load_predictions(p) for p in args.inputs]
    ctx: FusionContext | None = None
    truth: dict[str, Label] | None = None
    if args.manifest is not None:
        corpus = load_manifest(args.manifest)
        task = args.task
        if task is None:
            raise ConfigError("--manifest needs --task to pick the label column")
        ctx = FusionContext.for_task(corpus, task)
        truth = {
            r.story_id: getattr(r, task)
            for r in corpus.stories
            if getattr(r, task) is not None
        }
    if args.counts is not None:
        ctx = FusionContext.from_counts(_parse_counts(args.counts))
    return sets, ctx, truth


def _finish_fusion(
    fused: PredictionSet, truth: dict[str, Label] | None, out: str
) -> int:
    save_predictions(Path(out), fused)
    line = f"fused {len(fused)} stories -> {out}"
    if truth is not None and all(sid in truth for sid in fused.story_ids):
        reference = [truth[sid] for sid in fused.story_ids]
        confusion = ConfusionMatrix.from_pairs(reference, fused.labels)
        line += f"  (UAR {confusion.uar():.4f})"
    print(line)
    return 0


def cmd_fuse_two(args: argparse.Namespace) -> int:
    sets, ctx, truth = _fusion_inputs(args)
    if len(sets) != 2:
        raise ConfigError(f"fuse two takes exactly 2 prediction files, got {len(sets)}")
    if ctx is None:
        raise ConfigError("fuse two needs --counts or --manifest/--task for the minority set")
    fused = fuse_two(sets[0], sets[1], ctx)
    return _finish_fusion(fused, truth, args.out)


def cmd_fuse_vote(args: argparse.Namespace) -> int:
    sets, ctx, truth = _fusion_inputs(args)
    if ctx is None:
        raise ConfigError("fuse vote needs --counts or --manifest/--task for tie-breaking")
    fused = majority_vote(sets, ctx)
    return _finish_fusion(fused, truth, args.out)


def cmd_fuse_weighted(args: argparse.Namespace) -> int:
    sets, ctx, truth = _fusion_inputs(args)
    if args.weights.strip().lower() == "search":
        if truth is None:
            raise ConfigError("--weights search needs --manifest/--task for reference labels")
        missing = [sid for sid in sets[0].story_ids if sid not in truth]
        if missing:
            raise DataError(f"{len(missing)} stories lack labels (first: {missing[0]!r})")
        reference = [truth[sid] for sid in sets[0].story_ids]
        weights = search_fusion_weights(sets, reference, step=args.step, ctx=ctx)
        print("searched weights:", ",".join(f"{w:g}" for w in weights))
    else:
        try:
            weights = tuple(float(w) for w in args.weights.split(","))
        except ValueError:
            raise ConfigError(f"--weights must be numbers or 'search', got {args.weights!r}") from None
    fused = weighted_score_fusion(sets, weights, ctx)
    return _finish_fusion(fused, truth, args.out)


# ----------------------------------------------------------------------
# report

def cmd_report(args: argparse.Namespace) -> int:
    clock = StageClock()
    cfg = load_config(args.config)
    pred_dir = Path(args.pred_dir)
    if not pred_dir.is_dir():
        raise DataError(f"prediction directory not found: {pred_dir}")
    candidates = sorted(pred_dir.glob("*.csv"))
    sets: list[tuple[str, PredictionSet]] = []
    for path in candidates:
        with path.open(newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), None)
        if header == PREDICTION_FIELDS:
            sets.append((path.name, load_predictions(path)))
    if not sets:
        raise DataError(f"no predictions in {pred_dir}")
    clock.mark("load")

    truth: dict[str, Label] = {}
    if cfg.paths.manifest.exists():
        corpus = load_manifest(cfg.paths.manifest)
        truth = {
            r.story_id: getattr(r, cfg.task)
            for r in corpus.stories
            if getattr(r, cfg.task) is not None
        }

    summary_rows = []
    detail_sections = []
    for name, pset in sets:
        if truth and all(sid in truth for sid in pset.story_ids):
            reference = [truth[sid] for sid in pset.story_ids]
            confusion = ConfusionMatrix.from_pairs(reference, pset.labels)
            summary_rows.append([name, pset.source, len(pset), f"{confusion.uar():.6f}"])
            detail_sections.extend(
                [
                    f"{name} ({pset.source}): {len(pset)} stories, UAR {confusion.uar():.4f}",
                    confusion.render(),
                    "",
                ]
            )
        else:
            summary_rows.append([name, pset.source, len(pset), ""])
            detail_sections.append(f"{name} ({pset.source}): {len(pset)} stories, no labels")
    _write_csv(
        Path(args.out_csv) if args.out_csv else pred_dir / "summary.csv",
        ["file", "source", "n", "uar"],
        summary_rows,
    )
    clock.mark("score")

    report_path = Path(args.out) if args.out else pred_dir / "report.txt"
    _write_report(
        report_path,
        "prediction report",
        [
            *_config_header(args.config, cfg),
            f"directory:   {pred_dir}",
            f"files:       {len(sets)}",
            "",
            *detail_sections,
            "stage timings:",
            *clock.lines(),
        ],
    )
    print(f"report over {len(sets)} prediction files -> {report_path}")
    return 0


# ----------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affectpipe",
        description="Bi-modal ternary emotion classification pipeline.",
        epilog=f"Set {WORKERS_ENV} to parallelize audio feature extraction.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic corpus")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--speakers", type=int, default=87)
    p.add_argument("--stories", type=int, default=3, help="stories per speaker")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="write per-story feature rows as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fv", help="fit or apply the acoustic frontend")
    fv_sub = p.add_subparsers(dest="fv_command", required=True)
    q = fv_sub.add_parser("fit", help="fit frame PCA + background GMM, save a model file")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True, help="model file path")
    q.set_defaults(func=cmd_fv_fit)
    q = fv_sub.add_parser("encode", help="encode every story as a Fisher vector CSV")
    q.add_argument("--config", required=True)
    q.add_argument("--model", required=True, help="model file from fv fit")
    q.add_argument("--out", required=True, help="output CSV path")
    q.set_defaults(func=cmd_fv_encode)

    p = sub.add_parser("cv", help="speaker-disjoint N-fold cross-validation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override cv.seed")
    p.add_argument("--folds", type=int, default=None, help="override cv.folds")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("nested", help="nested CV with inner hyper-parameter selection")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override cv.seed")
    p.add_argument("--folds", type=int, default=None, help="override cv.folds")
    p.add_argument("--inner-folds", type=int, default=None, help="override cv.inner_folds")
    p.set_defaults(func=cmd_nested)

    p = sub.add_parser("fuse", help="decision-level fusion of prediction CSVs")
    fuse_sub = p.add_subparsers(dest="fuse_command", required=True)

    def fuse_common(q: argparse.ArgumentParser) -> None:
        q.add_argument("inputs", nargs="+", help="prediction CSV files")
        q.add_argument("--out", required=True, help="fused prediction CSV path")
        q.add_argument("--counts", default=None, help="training class counts, e.g. L=70,M=120,H=60")
        q.add_argument("--manifest", default=None, help="corpus manifest for counts and labels")
        q.add_argument("--task", default=None, choices=("valence", "arousal"))

    q = fuse_sub.add_parser("two", help="ordinal rule fusion of a (P, S) pair")
    fuse_common(q)
    q.set_defaults(func=cmd_fuse_two)
    q = fuse_sub.add_parser("vote", help="majority vote over 3+ prediction sets")
    fuse_common(q)
    q.set_defaults(func=cmd_fuse_vote)
    q = fuse_sub.add_parser("weighted", help="weighted mixing of decision scores")
    fuse_common(q)
    q.add_argument(
        "--weights", required=True,
        help="comma-separated simplex weights, or 'search' (needs --manifest/--task)",
    )
    q.add_argument("--step", type=float, default=0.1, help="search grid step")
    q.set_defaults(func=cmd_fuse_weighted)

    p = sub.add_parser("report", help="summarize a directory of prediction CSVs")
    p.add_argument("--config", required=True)
    p.add_argument("--pred-dir", required=True)
    p.add_argument("--out", default=None, help="report text path (default: <pred-dir>/report.txt)")
    p.add_argument("--out-csv", default=None, help="summary CSV path (default: <pred-dir>/summary.csv)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except AffectPipeError as exc:  # base-class fallback, treated as data
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
