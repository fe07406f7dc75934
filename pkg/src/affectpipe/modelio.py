"""Versioned binary model container (magic AFP1).

Layout: magic, version, section count, then a section table (name, kind,
shape, offset, byte length) followed by the payload blobs. Numeric payloads
are little-endian float64; strings are UTF-8. Model-specific helpers map
PcaModel / GmmModel to named sections.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .fv import GmmModel, PcaModel

MAGIC = b"AFP1"
VERSION = 1

_KIND_F64 = 0
_KIND_UTF8 = 1

Section = "np.ndarray | str"


def save_sections(path: str | Path, sections: dict[str, np.ndarray | str]) -> None:
    entries = []
    blobs = []
    for name, value in sections.items():
        if isinstance(value, str):
            blob = value.encode("utf-8")
            kind, dims = _KIND_UTF8, ()
        else:
            arr = np.ascontiguousarray(np.asarray(value, dtype=np.float64))
            blob = arr.astype("<f8").tobytes()
            kind, dims = _KIND_F64, arr.shape
        entries.append((name.encode("utf-8"), kind, dims, len(blob)))
        blobs.append(blob)

    table = b""
    fixed = []
    for name_b, kind, dims, nbytes in entries:
        head = struct.pack("<H", len(name_b)) + name_b + struct.pack("<BB", kind, len(dims))
        head += b"".join(struct.pack("<Q", d) for d in dims)
        fixed.append((head, nbytes))
    # offsets are known only once the table size is; two passes
    table_size = sum(len(h) + 16 for h, _ in fixed)
    offset = 4 + 4 + 4 + table_size
    for head, nbytes in fixed:
        table += head + struct.pack("<QQ", offset, nbytes)
        offset += nbytes
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(entries)))
        fh.write(table)
        for blob in blobs:
            fh.write(blob)


def load_sections(path: str | Path) -> dict[str, np.ndarray | str]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise DataError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise DataError(f"{path}: unsupported container version {version}")
    pos = 12
    found: dict[str, np.ndarray | str] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos : pos + nlen].decode("utf-8")
        pos += nlen
        kind, ndim = struct.unpack_from("<BB", raw, pos)
        pos += 2
        dims = struct.unpack_from("<" + "Q" * ndim, raw, pos) if ndim else ()
        pos += 8 * ndim
        offset, nbytes = struct.unpack_from("<QQ", raw, pos)
        pos += 16
        blob = raw[offset : offset + nbytes]
        if len(blob) != nbytes:
            raise DataError(f"{path}: truncated section {name!r}")
        if kind == _KIND_UTF8:
            found[name] = blob.decode("utf-8")
        elif kind == _KIND_F64:
            found[name] = np.frombuffer(blob, dtype="<f8").reshape(dims).copy()
        else:
            raise DataError(f"{path}: unknown section kind {kind} for {name!r}")
    return found


def save_pca(path: str | Path, model: PcaModel) -> None:
    save_sections(
        path,
        {
            "model_kind": "pca",
            "pca.mean": model.mean,
            "pca.basis": model.basis,
            "pca.explained_ratio": model.explained_ratio,
        },
    )


def load_pca(path: str | Path) -> PcaModel:
    sec = load_sections(path)
    if sec.get("model_kind") != "pca":
        raise DataError(f"{path}: not a PCA model file")
    return PcaModel(
        mean=sec["pca.mean"],
        basis=sec["pca.basis"],
        explained_ratio=sec["pca.explained_ratio"],
    )


def save_gmm(path: str | Path, model: GmmModel) -> None:
    save_sections(
        path,
        {
            "model_kind": "gmm",
            "gmm.weights": model.weights,
            "gmm.means": model.means,
            "gmm.variances": model.variances,
            "gmm.train_ll": np.array([model.train_log_likelihood]),
            "gmm.ll_curve": model.log_likelihoods,
        },
    )


def load_gmm(path: str | Path) -> GmmModel:
    sec = load_sections(path)
    if sec.get("model_kind") != "gmm":
        raise DataError(f"{path}: not a GMM model file")
    return GmmModel(
        weights=sec["gmm.weights"],
        means=sec["gmm.means"],
        variances=sec["gmm.variances"],
        train_log_likelihood=float(sec["gmm.train_ll"][0]),
        log_likelihoods=sec["gmm.ll_curve"],
    )


def save_pca_gmm(path: str | Path, pca: PcaModel | None, gmm: GmmModel) -> None:
    """Bundle the LLD de-correlation PCA (optional) with the background GMM."""
    sections: dict[str, np.ndarray | str] = {
        "model_kind": "fv-background",
        "gmm.weights": gmm.weights,
        "gmm.means": gmm.means,
        "gmm.variances": gmm.variances,
        "gmm.train_ll": np.array([gmm.train_log_likelihood]),
        "gmm.ll_curve": gmm.log_likelihoods,
    }
    if pca is not None:
        sections["pca.mean"] = pca.mean
        sections["pca.basis"] = pca.basis
        sections["pca.explained_ratio"] = pca.explained_ratio
    save_sections(path, sections)


def load_pca_gmm(path: str | Path) -> tuple[PcaModel | None, GmmModel]:
    sec = load_sections(path)
    if sec.get("model_kind") != "fv-background":
        raise DataError(f"{path}: not an FV background model file")
    pca = None
    if "pca.basis" in sec:
        pca = PcaModel(
            mean=sec["pca.mean"],
            basis=sec["pca.basis"],
            explained_ratio=sec["pca.explained_ratio"],
        )
    gmm = GmmModel(
        weights=sec["gmm.weights"],
        means=sec["gmm.means"],
        variances=sec["gmm.variances"],
        train_log_likelihood=float(sec["gmm.train_ll"][0]),
        log_likelihoods=sec["gmm.ll_curve"],
    )
    return pca, gmm
