"""Stage assembly: cached feature extraction, per-fold fits, and CV glue.

This module sits between the generic CV runners and the feature /
classifier stages. A FeatureAssembler owns the per-story caches (LLD
matrices on disk and in memory, fold-independent linguistic blocks) and
fits the fold-local stages (frame PCA, GMM, FV PCA, TF-IDF vocabulary)
on training records only. run_pipeline_cv / run_pipeline_nested wire
those pieces into run_cv / run_nested_cv.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .corpus import Corpus, StoryRecord, load_manifest, load_sidecar, read_audio
from .dsp import FrameConfig, LldMatrix, extract_story_llds, load_lld, pool_story, save_lld
from .errors import ConfigError, DataError
from .evalcv import (
    AuditingLabelStore,
    CvResult,
    FoldPlan,
    NestedCvResult,
    plan_folds,
    run_cv,
    run_nested_cv,
)
from .fv import GmmModel, PcaModel, apply_pca, encode_fv, fit_gmm, fit_pca, normalize_fv
from .learn import KernelSpec, PredictionSet, TrainedModel, fit_classifier, predict
from .text.features import (
    SENTIWORDNET_FEATURE_NAMES,
    SENTIWS_FEATURE_NAMES,
    EmbeddingTable,
    embed_average,
    load_embeddings,
    sentiwordnet_features,
    sentiws_features,
)
from .text.lexicons import Lexicon, parse_sentiws, parse_sentiwordnet
from .text.tfidf import TfidfModel, fit_tfidf, load_stopwords, tfidf_transform
from .text.tokens import TokenSeq, tokenize

log = logging.getLogger(__name__)

WORKERS_ENV = "AFFECTPIPE_WORKERS"


def worker_count() -> int:
    """Worker processes for LLD extraction, from the environment (min 1)."""
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def extract_story(record: StoryRecord, frame_config: FrameConfig) -> LldMatrix:
    """Extract and pool the full LLD matrix for one story's audio chunks."""
    if not record.audio_chunks:
        raise DataError(f"story {record.story_id!r} has no audio chunks")
    chunks = [extract_story_llds(read_audio(p), frame_config) for p in record.audio_chunks]
    return pool_story(chunks)


def _extract_worker(args: tuple[StoryRecord, FrameConfig]) -> tuple[str, LldMatrix]:
    record, frame_config = args
    return record.story_id, extract_story(record, frame_config)


@dataclasses.dataclass
class AcousticModel:
    """Fold-local acoustic stages: frame rotation, background GMM, FV shrink."""

    frame_pca: PcaModel
    gmm: GmmModel
    fv_pca: PcaModel | None


@dataclasses.dataclass
class FeatureModel:
    """Everything fit on one training split that turning a story into a row needs."""

    acoustic: AcousticModel | None
    tfidf: TfidfModel | None
    feature_names: list[str]


@dataclasses.dataclass
class FoldModel:
    features: FeatureModel
    classifier: TrainedModel


def _frame_tag(cfg: FrameConfig) -> str:
    text = f"{cfg.window_s}|{cfg.hop_s}|{cfg.window_fn}|{cfg.mel_filters}|{cfg.fft_size}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:8]


def _safe_stem(story_id: str) -> str:
    safe = re.sub(r"[^\w.\-]", "_", story_id)
    if safe == story_id:
        return safe
    return f"{safe}-{hashlib.sha256(story_id.encode('utf-8')).hexdigest()[:8]}"


class FeatureAssembler:
    """Turns StoryRecords into numeric rows under one pipeline config.

    Fold-independent work (LLD extraction, lexicon statistics, embedding
    averages, sidecar values) is computed once per story and cached; the
    fold-dependent stages are fit through fit_fold_features on training
    records only and applied elsewhere via feature_rows.
    """

    def __init__(
        self,
        cfg: PipelineConfig,
        corpus: Corpus,
        frame_config: FrameConfig | None = None,
    ) -> None:
        self.cfg = cfg
        self.corpus = corpus
        self.frame_config = frame_config if frame_config is not None else FrameConfig()
        self._llds: dict[str, LldMatrix] = {}
        self._tokens: dict[tuple[str, str, bool], TokenSeq] = {}
        self._static: dict[tuple[str, str], np.ndarray] = {}
        self._sentiws: Lexicon | None = None
        self._sentiwordnet: Lexicon | None = None
        self._embeddings: EmbeddingTable | None = None
        self._stopwords: dict[str, frozenset[str]] = {}
        self._warned_empty_sidecar = False

    # ------------------------------------------------------------------
    # lazily loaded shared resources

    def _require_path(self, key: str) -> Path:
        path: Path | None = getattr(self.cfg.paths, key)
        if path is None:
            raise ConfigError(f"paths.{key} is required by the enabled configuration but not set")
        if not path.exists():
            raise ConfigError(f"paths.{key}: file not found: {path}")
        return path

    def sentiws_lexicon(self) -> Lexicon:
        if self._sentiws is None:
            self._sentiws = parse_sentiws(self._require_path("sentiws"))
        return self._sentiws

    def sentiwordnet_lexicon(self) -> Lexicon:
        if self._sentiwordnet is None:
            self._sentiwordnet = parse_sentiwordnet(self._require_path("sentiwordnet"))
        return self._sentiwordnet

    def embedding_table(self) -> EmbeddingTable:
        if self._embeddings is None:
            key = f"embeddings_{self.cfg.linguistic.embeddings_lang}"
            self._embeddings = load_embeddings(self._require_path(key))
        return self._embeddings

    def stopwords(self, lang: str) -> frozenset[str]:
        if lang not in self._stopwords:
            path: Path | None = getattr(self.cfg.paths, f"stopwords_{lang}")
            self._stopwords[lang] = load_stopwords(path) if path is not None else frozenset()
        return self._stopwords[lang]

    # ------------------------------------------------------------------
    # audio side

    def _lld_cache_path(self, story_id: str) -> Path:
        cache_dir = self.cfg.paths.workdir / "lld"
        return cache_dir / f"{_safe_stem(story_id)}.{_frame_tag(self.frame_config)}.lld"

    def story_lld(self, record: StoryRecord) -> LldMatrix:
        """Pooled story LLDs, read through the in-memory and on-disk caches."""
        hit = self._llds.get(record.story_id)
        if hit is not None:
            return hit
        cache = self._lld_cache_path(record.story_id)
        if cache.is_file():
            lld = load_lld(cache)
        else:
            lld = extract_story(record, self.frame_config)
            cache.parent.mkdir(parents=True, exist_ok=True)
            save_lld(cache, lld)
        self._llds[record.story_id] = lld
        return lld

    def prefetch_llds(self, records: list[StoryRecord]) -> None:
        """Extract any uncached story LLDs, in parallel when configured."""
        missing = [
            r
            for r in records
            if r.story_id not in self._llds and not self._lld_cache_path(r.story_id).is_file()
        ]
        workers = worker_count()
        if workers > 1 and len(missing) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                pairs = pool.map(_extract_worker, [(r, self.frame_config) for r in missing])
                for story_id, lld in pairs:
                    cache = self._lld_cache_path(story_id)
                    cache.parent.mkdir(parents=True, exist_ok=True)
                    save_lld(cache, lld)
                    self._llds[story_id] = lld
        else:
            for record in missing:
                self.story_lld(record)

    def fit_frontend(self, train: list[StoryRecord]) -> tuple[PcaModel, GmmModel]:
        """Fit the frame rotation and the background GMM on training stories."""
        self.prefetch_llds(train)
        frames = np.vstack([self.story_lld(r).frames for r in train])
        ac = self.cfg.acoustic
        frame_pca = fit_pca(frames, variance=ac.pca_variance, n_components=ac.pca_components)
        gmm = fit_gmm(apply_pca(frame_pca, frames), ac.k_gmm, seed=self.cfg.cv.seed)
        return frame_pca, gmm

    def story_fv(self, frame_pca: PcaModel, gmm: GmmModel, record: StoryRecord) -> np.ndarray:
        """Normalized Fisher Vector of one story under fitted frontend stages."""
        reduced = apply_pca(frame_pca, self.story_lld(record).frames)
        fv = encode_fv(gmm, reduced)
        ac = self.cfg.acoustic
        return normalize_fv(fv, power=ac.power_normalize, l2=ac.l2_normalize).values

    # ------------------------------------------------------------------
    # linguistic side (fold-independent blocks, cached per story)

    def _doc(self, record: StoryRecord, lang: str, tag_pos: bool = False) -> TokenSeq:
        key = (record.story_id, lang, tag_pos)
        doc = self._tokens.get(key)
        if doc is None:
            text = record.transcript_de if lang == "de" else record.transcript_en
            doc = tokenize(text, lang, tag_pos=tag_pos)
            self._tokens[key] = doc
        return doc

    def dictionary_stats(self, record: StoryRecord) -> np.ndarray:
        """The 19 lexicon statistics (7 SentiWS + 12 SentiWordNet) of a story."""
        sentiws = self.static_block(record, "sentiws")
        sentiwordnet = self.static_block(record, "sentiwordnet")
        return np.concatenate([sentiws, sentiwordnet])

    def dictionary_candidates(
        self, records: list[StoryRecord]
    ) -> tuple[np.ndarray, tuple[str, ...]]:
        """Candidate pool for subset selection: one row of 19 statistics per story."""
        rows = np.stack([self.dictionary_stats(r) for r in records])
        return rows, SENTIWS_FEATURE_NAMES + SENTIWORDNET_FEATURE_NAMES

    def static_block(self, record: StoryRecord, block: str) -> np.ndarray:
        key = (record.story_id, block)
        hit = self._static.get(key)
        if hit is not None:
            return hit
        if block == "sentiws":
            values = sentiws_features(self.sentiws_lexicon(), self._doc(record, "de")).concat()
        elif block == "sentiwordnet":
            doc = self._doc(record, "en", tag_pos=True)
            values = sentiwordnet_features(self.sentiwordnet_lexicon(), doc).concat()
        elif block == "embeddings":
            doc = self._doc(record, self.cfg.linguistic.embeddings_lang)
            values = embed_average(self.embedding_table(), doc).concat()
        elif block == "sidecar":
            names = self.corpus.sidecar_names
            if not names and not self._warned_empty_sidecar:
                log.warning("sidecar block enabled but the corpus carries no sidecar columns")
                self._warned_empty_sidecar = True
            values = np.array([record.sidecar.get(n, 0.0) for n in names])
        elif block == "dictionary":
            all_names = SENTIWS_FEATURE_NAMES + SENTIWORDNET_FEATURE_NAMES
            index = {name: j for j, name in enumerate(all_names)}
            stats = self.dictionary_stats(record)
            cols = []
            for name in self.cfg.linguistic.dictionary_subset:
                if name not in index:
                    raise ConfigError(
                        f"linguistic.dictionary_subset: unknown statistic {name!r}"
                    )
                cols.append(stats[index[name]])
            values = np.array(cols)
        else:
            raise ConfigError(f"unknown linguistic block {block!r}")
        self._static[key] = values
        return values

    def _block_names(self, block: str, tfidf: TfidfModel | None) -> list[str]:
        if block == "tfidf":
            if tfidf is None:
                raise DataError("tfidf block requested but no fitted model supplied")
            return [f"tfidf.{name}" for name in tfidf.feature_names]
        if block == "sentiws":
            return list(SENTIWS_FEATURE_NAMES)
        if block == "sentiwordnet":
            return list(SENTIWORDNET_FEATURE_NAMES)
        if block == "embeddings":
            return [f"embed.{i:03d}" for i in range(self.embedding_table().dim)]
        if block == "sidecar":
            return [f"sidecar.{name}" for name in self.corpus.sidecar_names]
        if block == "dictionary":
            return [f"dictionary.{name}" for name in self.cfg.linguistic.dictionary_subset]
        raise ConfigError(f"unknown linguistic block {block!r}")

    def linguistic_row(self, tfidf: TfidfModel | None, record: StoryRecord) -> np.ndarray:
        parts = []
        for block in self.cfg.linguistic.blocks:
            if block == "tfidf":
                if tfidf is None:
                    raise DataError("tfidf block requested but no fitted model supplied")
                doc = self._doc(record, tfidf.lang)
                parts.append(tfidf_transform(tfidf, doc).concat())
            else:
                parts.append(self.static_block(record, block))
        return np.concatenate(parts) if parts else np.zeros(0)

    # ------------------------------------------------------------------
    # per-fold stage fitting and row assembly

    def fit_fold_features(
        self, train: list[StoryRecord], fit_fv_pca: bool = True
    ) -> tuple[FeatureModel, np.ndarray]:
        """Fit every fold-local stage on `train` and return the training rows."""
        if not train:
            raise DataError("cannot fit feature stages on an empty training split")
        names: list[str] = []
        parts: list[np.ndarray] = []
        acoustic: AcousticModel | None = None
        tfidf: TfidfModel | None = None

        if self.cfg.acoustic.enabled:
            frame_pca, gmm = self.fit_frontend(train)
            fvs = np.stack([self.story_fv(frame_pca, gmm, r) for r in train])
            fv_pca = None
            rows = fvs
            wanted = self.cfg.acoustic.fv_pca_components
            if fit_fv_pca and wanted > 0:
                fv_pca = fit_pca(fvs, n_components=min(wanted, fvs.shape[1]))
                rows = apply_pca(fv_pca, fvs)
            acoustic = AcousticModel(frame_pca, gmm, fv_pca)
            parts.append(rows)
            names.extend(f"fv.{i:04d}" for i in range(rows.shape[1]))

        if self.cfg.linguistic.enabled:
            li = self.cfg.linguistic
            if "tfidf" in li.blocks:
                docs = [self._doc(r, li.tfidf_lang) for r in train]
                tfidf = fit_tfidf(
                    docs, li.tfidf_lang, self.stopwords(li.tfidf_lang), li.sublinear_tf
                )
            parts.append(np.stack([self.linguistic_row(tfidf, r) for r in train]))
            for block in li.blocks:
                names.extend(self._block_names(block, tfidf))

        model = FeatureModel(acoustic=acoustic, tfidf=tfidf, feature_names=names)
        return model, np.hstack(parts)

    def feature_rows(self, model: FeatureModel, records: list[StoryRecord]) -> np.ndarray:
        """Rows for arbitrary records under already-fitted stages."""
        if not records:
            raise DataError("no records to assemble feature rows for")
        parts: list[np.ndarray] = []
        if self.cfg.acoustic.enabled:
            if model.acoustic is None:
                raise DataError("acoustic stage enabled but the feature model lacks it")
            self.prefetch_llds(records)
            am = model.acoustic
            fvs = np.stack([self.story_fv(am.frame_pca, am.gmm, r) for r in records])
            parts.append(apply_pca(am.fv_pca, fvs) if am.fv_pca is not None else fvs)
        if self.cfg.linguistic.enabled:
            parts.append(np.stack([self.linguistic_row(model.tfidf, r) for r in records]))
        return np.hstack(parts)


# ----------------------------------------------------------------------
# classifier wiring

def classifier_kernel(cfg: PipelineConfig) -> KernelSpec | None:
    if cfg.classifier.kind == "ridge-ovr":
        return None
    return KernelSpec(cfg.classifier.kernel, cfg.classifier.gamma)


def classifier_hyperparams(cfg: PipelineConfig) -> dict[str, float]:
    kind = cfg.classifier.kind
    if kind in ("kelm", "wkelm"):
        return {"C_reg": cfg.classifier.c_reg}
    if kind in ("kpls", "wkpls"):
        return {"L_components": cfg.classifier.l_components}
    return {"l2": cfg.classifier.l2}


def hyper_grid(cfg: PipelineConfig) -> list[dict[str, float]]:
    """Nested-CV search grid for the configured classifier kind."""
    kind = cfg.classifier.kind
    if kind in ("kelm", "wkelm"):
        return [{"C_reg": c} for c in cfg.classifier.grid_c_reg]
    if kind in ("kpls", "wkpls"):
        return [{"L_components": float(l)} for l in cfg.classifier.grid_l_components]
    return [{"l2": c} for c in cfg.classifier.grid_c_reg]


def make_fold_functions(
    assembler: FeatureAssembler, hyperparams: dict[str, float] | None = None
):
    """fit/predict callables over the assembler, for the generic CV runners."""
    cfg = assembler.cfg
    hp = hyperparams if hyperparams is not None else classifier_hyperparams(cfg)
    standardize = cfg.acoustic.standardize if cfg.acoustic.enabled else True

    def fit_fn(train: list[StoryRecord]) -> FoldModel:
        features, rows = assembler.fit_fold_features(train)
        labels = [getattr(r, cfg.task) for r in train]
        clf = fit_classifier(
            cfg.classifier.kind,
            rows,
            labels,
            kernel=classifier_kernel(cfg),
            hyperparams=hp,
            standardize=standardize,
        )
        return FoldModel(features, clf)

    def predict_fn(model: FoldModel, test: list[StoryRecord]) -> PredictionSet:
        rows = assembler.feature_rows(model.features, test)
        return predict(model.classifier, rows, [r.story_id for r in test])

    return fit_fn, predict_fn


def load_pipeline_corpus(cfg: PipelineConfig) -> Corpus:
    """Manifest plus, when the sidecar block is enabled, its attached columns."""
    corpus = load_manifest(cfg.paths.manifest)
    if cfg.linguistic.enabled and "sidecar" in cfg.linguistic.blocks:
        if cfg.paths.sidecar is None:
            raise ConfigError("paths.sidecar is required by the sidecar block but not set")
        corpus = load_sidecar(cfg.paths.sidecar, corpus)
    return corpus


def run_pipeline_cv(
    cfg: PipelineConfig,
    corpus: Corpus | None = None,
    label_store: AuditingLabelStore | None = None,
) -> tuple[CvResult, FoldPlan]:
    """Speaker-disjoint N-fold CV of the configured feature + classifier stack."""
    if corpus is None:
        corpus = load_pipeline_corpus(cfg)
    assembler = FeatureAssembler(cfg, corpus)
    plan = plan_folds(corpus, cfg.cv.folds, cfg.task, cfg.cv.seed)
    fit_fn, predict_fn = make_fold_functions(assembler)
    result = run_cv(corpus, plan, cfg.task, fit_fn, predict_fn, label_store=label_store)
    return result, plan


def run_pipeline_nested(
    cfg: PipelineConfig,
    corpus: Corpus | None = None,
    grid: list[dict[str, float]] | None = None,
    label_store: AuditingLabelStore | None = None,
) -> NestedCvResult:
    """Nested CV over the configured hyper-parameter grid."""
    if corpus is None:
        corpus = load_pipeline_corpus(cfg)
    assembler = FeatureAssembler(cfg, corpus)
    if grid is None:
        grid = hyper_grid(cfg)

    def fit_with(params: dict[str, float], records: list[StoryRecord]) -> FoldModel:
        fit_fn, _ = make_fold_functions(assembler, hyperparams=params)
        return fit_fn(records)

    def predict_fn(model: FoldModel, records: list[StoryRecord]) -> PredictionSet:
        _, pf = make_fold_functions(assembler)
        return pf(model, records)

    return run_nested_cv(
        corpus,
        cfg.task,
        cfg.cv.folds,
        cfg.cv.inner_folds,
        cfg.cv.seed,
        grid,
        fit_with,
        predict_fn,
        label_store=label_store,
    )
