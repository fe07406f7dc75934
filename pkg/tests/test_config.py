"""INI config loading, defaults, validation, and hashing."""

from pathlib import Path

import pytest

from affectpipe.config import (
    DEFAULT_GRID_C,
    DEFAULT_GRID_L,
    AcousticConfig,
    ClassifierConfig,
    CvConfig,
    FusionConfig,
    LinguisticConfig,
    PathsConfig,
    PipelineConfig,
    load_config,
)
from affectpipe.errors import ConfigError


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _minimal(tmp_path, extra=""):
    return _write(tmp_path, "[corpus]\nmanifest = manifest.csv\n" + extra)


def _direct_config(**overrides):
    base = dict(
        task="valence",
        paths=PathsConfig(manifest=Path("m.csv"), workdir=Path("work")),
        acoustic=AcousticConfig(),
        linguistic=LinguisticConfig(),
        classifier=ClassifierConfig(),
        fusion=FusionConfig(),
        cv=CvConfig(),
    )
    base.update(overrides)
    return PipelineConfig(**base)


# ----------------------------------------------------------------------
# loading and defaults

def test_defaults_and_path_resolution(tmp_path):
    cfg = load_config(_minimal(tmp_path))
    assert cfg.task == "valence"
    assert cfg.paths.manifest == tmp_path / "manifest.csv"
    assert cfg.paths.workdir == tmp_path / "work"
    assert cfg.paths.sidecar is None
    assert cfg.acoustic.enabled and cfg.linguistic.enabled
    assert cfg.acoustic.k_gmm == 16
    assert cfg.acoustic.pca_variance == 0.999
    assert cfg.acoustic.pca_components is None
    assert cfg.acoustic.fv_pca_components == 150
    assert cfg.linguistic.blocks == ("sentiws", "sentiwordnet", "dictionary")
    assert cfg.classifier.kind == "kelm"
    assert cfg.classifier.kernel == "linear"
    assert cfg.classifier.grid_c_reg == DEFAULT_GRID_C
    assert len(DEFAULT_GRID_C) == 7
    assert cfg.classifier.grid_l_components == DEFAULT_GRID_L
    assert cfg.fusion.mode == "none"
    assert cfg.fusion.weights is None
    assert (cfg.cv.folds, cfg.cv.inner_folds, cfg.cv.seed) == (4, 3, 7)


def test_absolute_paths_kept(tmp_path):
    cfg = load_config(
        _write(tmp_path, f"[corpus]\nmanifest = {tmp_path}/abs.csv\nworkdir = /tmp/w\n")
    )
    assert cfg.paths.manifest == tmp_path / "abs.csv"
    assert cfg.paths.workdir == Path("/tmp/w")


def test_overrides_parse(tmp_path):
    cfg = load_config(
        _minimal(
            tmp_path,
            "[task]\nname = arousal\n"
            "[acoustic]\nk_gmm = 8\npca_components = 40\nl2_normalize = no\n"
            "[linguistic]\nblocks = tfidf, dictionary\nsublinear_tf = yes\n"
            "[classifier]\nkind = wkelm\nkernel = rbf\ngamma = 0.5\n"
            "grid_c_reg = 0.1, 1, 10\ngrid_l_components = 1, 2, 3\n"
            "[fusion]\nmode = weighted\nweights = 0.25, 0.75\n"
            "[cv]\nfolds = 6\ninner_folds = 2\nseed = 99\n",
        )
    )
    assert cfg.task == "arousal"
    assert cfg.acoustic.k_gmm == 8
    assert cfg.acoustic.pca_components == 40
    assert cfg.acoustic.pca_variance is None  # components given, variance cleared
    assert cfg.acoustic.l2_normalize is False
    assert cfg.linguistic.blocks == ("tfidf", "dictionary")
    assert cfg.linguistic.sublinear_tf is True
    assert cfg.classifier.kind == "wkelm"
    assert cfg.classifier.gamma == 0.5
    assert cfg.classifier.grid_c_reg == (0.1, 1.0, 10.0)
    assert cfg.classifier.grid_l_components == (1, 2, 3)
    assert cfg.fusion.weights == (0.25, 0.75)
    assert (cfg.cv.folds, cfg.cv.inner_folds, cfg.cv.seed) == (6, 2, 99)


def test_fusion_weights_search_keyword(tmp_path):
    cfg = load_config(_minimal(tmp_path, "[fusion]\nmode = weighted\nweights = search\n"))
    assert cfg.fusion.weights is None


def test_unknown_sections_and_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match=r"unknown section \[extra\]"):
        load_config(_minimal(tmp_path, "[extra]\nx = 1\n"))
    with pytest.raises(ConfigError, match="unknown key cv.bogus"):
        load_config(_minimal(tmp_path, "[cv]\nbogus = 1\n"))


def test_loader_error_cases(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.ini")
    with pytest.raises(ConfigError, match="manifest is required"):
        load_config(_write(tmp_path, "[cv]\nfolds = 4\n"))
    with pytest.raises(ConfigError, match="cv.folds: not an integer"):
        load_config(_minimal(tmp_path, "[cv]\nfolds = four\n"))
    with pytest.raises(ConfigError, match="not a boolean"):
        load_config(_minimal(tmp_path, "[acoustic]\nenabled = maybe\n"))
    with pytest.raises(ConfigError, match="not a number list"):
        load_config(_minimal(tmp_path, "[classifier]\ngrid_c_reg = 1, x\n"))


# ----------------------------------------------------------------------
# semantic validation

def test_validate_rejections_via_ini(tmp_path):
    with pytest.raises(ConfigError, match="task.name"):
        load_config(_minimal(tmp_path, "[task]\nname = dominance\n"))
    with pytest.raises(ConfigError, match="at least one of"):
        load_config(
            _minimal(tmp_path, "[acoustic]\nenabled = no\n[linguistic]\nenabled = no\n")
        )
    with pytest.raises(ConfigError, match="exactly one of"):
        load_config(
            _minimal(tmp_path, "[acoustic]\npca_variance = 0.9\npca_components = 10\n")
        )
    with pytest.raises(ConfigError, match=r"pca_variance must be in \(0, 1\]"):
        load_config(_minimal(tmp_path, "[acoustic]\npca_variance = 1.5\n"))
    with pytest.raises(ConfigError, match="unknown block"):
        load_config(_minimal(tmp_path, "[linguistic]\nblocks = tfidf, bogus\n"))
    with pytest.raises(ConfigError, match="classifier.gamma"):
        load_config(_minimal(tmp_path, "[classifier]\nkernel = rbf\n"))
    with pytest.raises(ConfigError, match="cv.folds must be >= 2"):
        load_config(_minimal(tmp_path, "[cv]\nfolds = 1\n"))


def test_validate_rejections_direct():
    with pytest.raises(ConfigError, match="dictionary_subset"):
        _direct_config(
            linguistic=LinguisticConfig(blocks=("dictionary",), dictionary_subset=())
        ).validate()
    with pytest.raises(ConfigError, match="sum to 1"):
        _direct_config(fusion=FusionConfig(mode="weighted", weights=(0.7, 0.7))).validate()
    with pytest.raises(ConfigError, match="non-negative"):
        _direct_config(fusion=FusionConfig(mode="weighted", weights=(1.5, -0.5))).validate()
    with pytest.raises(ConfigError, match="search_step"):
        _direct_config(fusion=FusionConfig(search_step=0.0)).validate()
    with pytest.raises(ConfigError, match="classifier.kind"):
        _direct_config(classifier=ClassifierConfig(kind="svm")).validate()


def test_validate_paths(tmp_path):
    (tmp_path / "manifest.csv").write_text("stub")
    (tmp_path / "sws.txt").write_text("gut|ADJX\t0.5\n")
    (tmp_path / "swn.tsv").write_text("a\t1\t0.5\t0\tgood#1\tg\n")
    good = load_config(
        _minimal(tmp_path, "[linguistic]\nblocks = sentiws, sentiwordnet\n")
    )
    # resource paths for the enabled blocks must be configured
    with pytest.raises(ConfigError, match="paths.sentiws is required"):
        good.validate_paths()
    cfg = load_config(
        _write(
            tmp_path,
            "[corpus]\nmanifest = manifest.csv\nsentiws = sws.txt\nsentiwordnet = swn.tsv\n"
            "[linguistic]\nblocks = sentiws, sentiwordnet\n",
            name="ok.ini",
        )
    )
    cfg.validate_paths()  # everything exists
    missing = load_config(
        _write(
            tmp_path,
            "[corpus]\nmanifest = manifest.csv\nsentiws = nope.txt\nsentiwordnet = swn.tsv\n"
            "[linguistic]\nblocks = sentiws\n",
            name="missing.ini",
        )
    )
    with pytest.raises(ConfigError, match="paths.sentiws: file not found"):
        missing.validate_paths()
    sidecar = load_config(
        _write(
            tmp_path,
            "[corpus]\nmanifest = manifest.csv\n[linguistic]\nblocks = sidecar\n",
            name="sidecar.ini",
        )
    )
    with pytest.raises(ConfigError, match="paths.sidecar is required"):
        sidecar.validate_paths()


# ----------------------------------------------------------------------
# canonical dump and hashing

def test_canonical_dump_and_hash(tmp_path):
    path = _minimal(tmp_path)
    a = load_config(path)
    b = load_config(path)
    assert a.canonical_dump() == b.canonical_dump()
    assert "task.name=valence" in a.canonical_dump()
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 16
    int(a.config_hash(), 16)  # hex digest prefix

    other = load_config(_minimal(tmp_path, "[task]\nname = arousal\n"))
    assert other.config_hash() != a.config_hash()
    reseeded = load_config(_minimal(tmp_path, "[cv]\nseed = 8\n"))
    assert reseeded.config_hash() != a.config_hash()
