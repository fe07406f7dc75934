"""Pipeline configuration: INI file loading, validation, and hashing.

One structured config file drives every command; sweeps are config
diffs. Relative paths are resolved against the config file's directory,
and the config hash (sha256 over the resolved canonical dump) is
recorded in run artifacts so reports stay attributable.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
from pathlib import Path

from .errors import ConfigError
from .learn import MODEL_KINDS
from .text.select import REFERENCE_DICTIONARY_SUBSET

LINGUISTIC_BLOCKS = ("tfidf", "embeddings", "sentiws", "sentiwordnet", "sidecar", "dictionary")
FUSION_MODES = ("none", "two", "vote", "weighted")

DEFAULT_GRID_C = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0)
DEFAULT_GRID_L = tuple(range(1, 21))


@dataclasses.dataclass
class PathsConfig:
    manifest: Path
    workdir: Path
    sidecar: Path | None = None
    embeddings_de: Path | None = None
    embeddings_en: Path | None = None
    sentiws: Path | None = None
    sentiwordnet: Path | None = None
    stopwords_de: Path | None = None
    stopwords_en: Path | None = None


@dataclasses.dataclass
class AcousticConfig:
    enabled: bool = True
    k_gmm: int = 16
    pca_variance: float | None = 0.999
    pca_components: int | None = None
    fv_pca_components: int = 150
    power_normalize: bool = True
    l2_normalize: bool = True
    standardize: bool = True


@dataclasses.dataclass
class LinguisticConfig:
    enabled: bool = True
    blocks: tuple[str, ...] = ("sentiws", "sentiwordnet", "dictionary")
    dictionary_subset: tuple[str, ...] = REFERENCE_DICTIONARY_SUBSET
    tfidf_lang: str = "en"
    embeddings_lang: str = "en"
    sublinear_tf: bool = False


@dataclasses.dataclass
class ClassifierConfig:
    kind: str = "kelm"
    kernel: str = "linear"
    gamma: float | None = None
    c_reg: float = 1.0
    l_components: int = 2
    l2: float = 1e-6
    grid_c_reg: tuple[float, ...] = DEFAULT_GRID_C
    grid_l_components: tuple[int, ...] = DEFAULT_GRID_L


@dataclasses.dataclass
class FusionConfig:
    mode: str = "none"
    weights: tuple[float, ...] | None = None  # None means grid search
    search_step: float = 0.1


@dataclasses.dataclass
class CvConfig:
    folds: int = 4
    inner_folds: int = 3
    seed: int = 7


@dataclasses.dataclass
class PipelineConfig:
    task: str
    paths: PathsConfig
    acoustic: AcousticConfig
    linguistic: LinguisticConfig
    classifier: ClassifierConfig
    fusion: FusionConfig
    cv: CvConfig

    def canonical_dump(self) -> str:
        lines = []
        for section_name in ("task", "paths", "acoustic", "linguistic", "classifier", "fusion", "cv"):
            obj = getattr(self, section_name) if section_name != "task" else None
            if section_name == "task":
                lines.append(f"task.name={self.task}")
                continue
            for field in sorted(f.name for f in dataclasses.fields(obj)):
                lines.append(f"{section_name}.{field}={getattr(obj, field)!r}")
        return "\n".join(lines)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_dump().encode("utf-8")).hexdigest()[:16]

    def validate(self) -> None:
        if self.task not in ("valence", "arousal"):
            raise ConfigError(f"task.name must be valence or arousal, got {self.task!r}")
        if not self.acoustic.enabled and not self.linguistic.enabled:
            raise ConfigError("at least one of acoustic.enabled / linguistic.enabled must be true")
        ac = self.acoustic
        if ac.enabled:
            if ac.k_gmm < 1:
                raise ConfigError(f"acoustic.k_gmm must be >= 1, got {ac.k_gmm}")
            if (ac.pca_variance is None) == (ac.pca_components is None):
                raise ConfigError(
                    "exactly one of acoustic.pca_variance / acoustic.pca_components must be set"
                )
            if ac.pca_variance is not None and not 0 < ac.pca_variance <= 1:
                raise ConfigError(f"acoustic.pca_variance must be in (0, 1], got {ac.pca_variance}")
            if ac.pca_components is not None and ac.pca_components < 1:
                raise ConfigError("acoustic.pca_components must be >= 1")
            if ac.fv_pca_components < 0:
                raise ConfigError("acoustic.fv_pca_components must be >= 0 (0 disables)")
        li = self.linguistic
        if li.enabled:
            if not li.blocks:
                raise ConfigError("linguistic.blocks must list at least one block")
            for block in li.blocks:
                if block not in LINGUISTIC_BLOCKS:
                    raise ConfigError(
                        f"linguistic.blocks: unknown block {block!r} (choose from {LINGUISTIC_BLOCKS})"
                    )
            if li.tfidf_lang not in ("de", "en"):
                raise ConfigError(f"linguistic.tfidf_lang must be de or en, got {li.tfidf_lang!r}")
            if li.embeddings_lang not in ("de", "en"):
                raise ConfigError(
                    f"linguistic.embeddings_lang must be de or en, got {li.embeddings_lang!r}"
                )
            if "dictionary" in li.blocks and not li.dictionary_subset:
                raise ConfigError("linguistic.dictionary_subset must not be empty")
        cl = self.classifier
        if cl.kind not in MODEL_KINDS:
            raise ConfigError(f"classifier.kind {cl.kind!r} not in {MODEL_KINDS}")
        if cl.kernel not in ("linear", "rbf"):
            raise ConfigError(f"classifier.kernel must be linear or rbf, got {cl.kernel!r}")
        if cl.kernel == "rbf" and (cl.gamma is None or cl.gamma <= 0):
            raise ConfigError("classifier.gamma must be > 0 for the rbf kernel")
        if cl.c_reg <= 0:
            raise ConfigError(f"classifier.c_reg must be > 0, got {cl.c_reg}")
        if cl.l_components < 1:
            raise ConfigError(f"classifier.l_components must be >= 1, got {cl.l_components}")
        if cl.l2 < 0:
            raise ConfigError(f"classifier.l2 must be >= 0, got {cl.l2}")
        fu = self.fusion
        if fu.mode not in FUSION_MODES:
            raise ConfigError(f"fusion.mode {fu.mode!r} not in {FUSION_MODES}")
        if fu.weights is not None:
            if any(w < 0 for w in fu.weights):
                raise ConfigError("fusion.weights must be non-negative")
            if abs(sum(fu.weights) - 1.0) > 1e-9:
                raise ConfigError(f"fusion.weights must sum to 1, got {sum(fu.weights)}")
        if fu.search_step <= 0 or fu.search_step > 1:
            raise ConfigError(f"fusion.search_step must be in (0, 1], got {fu.search_step}")
        cv = self.cv
        if cv.folds < 2:
            raise ConfigError(f"cv.folds must be >= 2, got {cv.folds}")
        if cv.inner_folds < 2:
            raise ConfigError(f"cv.inner_folds must be >= 2, got {cv.inner_folds}")

    def validate_paths(self) -> None:
        """Check that every resource an enabled stage needs exists on disk."""
        need: list[tuple[str, Path | None]] = [("paths.manifest", self.paths.manifest)]
        li = self.linguistic
        if li.enabled:
            blocks = set(li.blocks)
            if "sentiws" in blocks or "dictionary" in blocks:
                need.append(("paths.sentiws", self.paths.sentiws))
            if "sentiwordnet" in blocks or "dictionary" in blocks:
                need.append(("paths.sentiwordnet", self.paths.sentiwordnet))
            if "embeddings" in blocks:
                key = f"paths.embeddings_{li.embeddings_lang}"
                need.append((key, getattr(self.paths, f"embeddings_{li.embeddings_lang}")))
            if "sidecar" in blocks:
                need.append(("paths.sidecar", self.paths.sidecar))
        for key, path in need:
            if path is None:
                raise ConfigError(f"{key} is required by the enabled configuration but not set")
            if not path.exists():
                raise ConfigError(f"{key}: file not found: {path}")


_SECTION_KEYS = {
    "corpus": (
        "manifest", "workdir", "sidecar", "embeddings_de", "embeddings_en",
        "sentiws", "sentiwordnet", "stopwords_de", "stopwords_en",
    ),
    "task": ("name",),
    "acoustic": (
        "enabled", "k_gmm", "pca_variance", "pca_components", "fv_pca_components",
        "power_normalize", "l2_normalize", "standardize",
    ),
    "linguistic": (
        "enabled", "blocks", "dictionary_subset", "tfidf_lang", "embeddings_lang",
        "sublinear_tf",
    ),
    "classifier": (
        "kind", "kernel", "gamma", "c_reg", "l_components", "l2",
        "grid_c_reg", "grid_l_components",
    ),
    "fusion": ("mode", "weights", "search_step"),
    "cv": ("folds", "inner_folds", "seed"),
}


class _Section:
    """Typed accessors over one INI section with precise error messages."""

    def __init__(self, name: str, values: dict[str, str]) -> None:
        self.name = name
        self.values = values

    def _get(self, key: str) -> str | None:
        raw = self.values.get(key)
        if raw is None or raw.strip() == "":
            return None
        return raw.strip()

    def string(self, key: str, default: str | None = None) -> str | None:
        raw = self._get(key)
        return raw if raw is not None else default

    def boolean(self, key: str, default: bool) -> bool:
        raw = self._get(key)
        if raw is None:
            return default
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{self.name}.{key}: not a boolean: {raw!r}")

    def integer(self, key: str, default: int | None) -> int | None:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: not an integer: {raw!r}") from None

    def real(self, key: str, default: float | None) -> float | None:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: not a number: {raw!r}") from None

    def names(self, key: str, default: tuple[str, ...]) -> tuple[str, ...]:
        raw = self._get(key)
        if raw is None:
            return default
        return tuple(part.strip() for part in raw.split(",") if part.strip())

    def reals(self, key: str, default: tuple[float, ...] | None) -> tuple[float, ...] | None:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return tuple(float(part) for part in raw.split(",") if part.strip())
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: not a number list: {raw!r}") from None

    def integers(self, key: str, default: tuple[int, ...]) -> tuple[int, ...]:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return tuple(int(part) for part in raw.split(",") if part.strip())
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: not an integer list: {raw!r}") from None

    def path(self, key: str, base: Path, default: Path | None = None) -> Path | None:
        raw = self._get(key)
        if raw is None:
            return default
        p = Path(raw)
        return p if p.is_absolute() else (base / p)


def load_config(path: str | Path) -> PipelineConfig:
    """Parse and validate an INI pipeline config.

    Unknown sections or keys are rejected so typos cannot silently fall
    back to defaults. Path values resolve relative to the config file.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
    base = path.parent

    def section(name: str) -> _Section:
        return _Section(name, dict(parser[name]) if parser.has_section(name) else {})

    corpus = section("corpus")
    manifest = corpus.path("manifest", base)
    if manifest is None:
        raise ConfigError("corpus.manifest is required")
    workdir = corpus.path("workdir", base, base / "work")
    paths = PathsConfig(
        manifest=manifest,
        workdir=workdir,
        sidecar=corpus.path("sidecar", base),
        embeddings_de=corpus.path("embeddings_de", base),
        embeddings_en=corpus.path("embeddings_en", base),
        sentiws=corpus.path("sentiws", base),
        sentiwordnet=corpus.path("sentiwordnet", base),
        stopwords_de=corpus.path("stopwords_de", base),
        stopwords_en=corpus.path("stopwords_en", base),
    )
    task = section("task").string("name", "valence")
    ac_s = section("acoustic")
    pca_variance = ac_s.real("pca_variance", None)
    pca_components = ac_s.integer("pca_components", None)
    if pca_variance is None and pca_components is None:
        pca_variance = 0.999
    acoustic = AcousticConfig(
        enabled=ac_s.boolean("enabled", True),
        k_gmm=ac_s.integer("k_gmm", 16),
        pca_variance=pca_variance,
        pca_components=pca_components,
        fv_pca_components=ac_s.integer("fv_pca_components", 150),
        power_normalize=ac_s.boolean("power_normalize", True),
        l2_normalize=ac_s.boolean("l2_normalize", True),
        standardize=ac_s.boolean("standardize", True),
    )
    li_s = section("linguistic")
    linguistic = LinguisticConfig(
        enabled=li_s.boolean("enabled", True),
        blocks=li_s.names("blocks", ("sentiws", "sentiwordnet", "dictionary")),
        dictionary_subset=li_s.names("dictionary_subset", REFERENCE_DICTIONARY_SUBSET),
        tfidf_lang=li_s.string("tfidf_lang", "en"),
        embeddings_lang=li_s.string("embeddings_lang", "en"),
        sublinear_tf=li_s.boolean("sublinear_tf", False),
    )
    cl_s = section("classifier")
    classifier = ClassifierConfig(
        kind=cl_s.string("kind", "kelm"),
        kernel=cl_s.string("kernel", "linear"),
        gamma=cl_s.real("gamma", None),
        c_reg=cl_s.real("c_reg", 1.0),
        l_components=cl_s.integer("l_components", 2),
        l2=cl_s.real("l2", 1e-6),
        grid_c_reg=cl_s.reals("grid_c_reg", DEFAULT_GRID_C),
        grid_l_components=cl_s.integers("grid_l_components", DEFAULT_GRID_L),
    )
    fu_s = section("fusion")
    weights_raw = fu_s.string("weights", None)
    if weights_raw is None or weights_raw.lower() == "search":
        weights = None
    else:
        weights = fu_s.reals("weights", None)
    fusion = FusionConfig(
        mode=fu_s.string("mode", "none"),
        weights=weights,
        search_step=fu_s.real("search_step", 0.1),
    )
    cv_s = section("cv")
    cv = CvConfig(
        folds=cv_s.integer("folds", 4),
        inner_folds=cv_s.integer("inner_folds", 3),
        seed=cv_s.integer("seed", 7),
    )
    cfg = PipelineConfig(task, paths, acoustic, linguistic, classifier, fusion, cv)
    cfg.validate()
    return cfg
