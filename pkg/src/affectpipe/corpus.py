"""Corpus ingestion: manifests, PCM audio, transcripts, labels, sidecar features.

The manifest is a UTF-8 CSV with header
``story_id,speaker_id,chunk_paths,transcript_de_path,transcript_en_path,valence,arousal``
where ``chunk_paths`` is a ``;``-separated ordered list and labels are
``L|M|H`` or empty. Relative paths are resolved against the manifest's
directory. Everything is read-only after load and safe to share across
workers.
"""

from __future__ import annotations

import csv
import logging
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .labels import LABELS, Label, minority_set

log = logging.getLogger(__name__)

MANIFEST_FIELDS = [
    "story_id",
    "speaker_id",
    "chunk_paths",
    "transcript_de_path",
    "transcript_en_path",
    "valence",
    "arousal",
]

TASKS = ("valence", "arousal")


@dataclass
class StoryRecord:
    """One narrative: audio chunk references, both transcripts, two labels."""

    story_id: str
    speaker_id: str
    audio_chunks: list[Path]
    transcript_de: str
    transcript_en: str
    valence: Label | None = None
    arousal: Label | None = None
    sidecar: dict[str, float] = field(default_factory=dict)

    @property
    def labeled(self) -> bool:
        return self.valence is not None and self.arousal is not None

    def label(self, task: str) -> Label | None:
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        return self.valence if task == "valence" else self.arousal


@dataclass
class AudioSegment:
    """Mono PCM audio scaled into [-1, 1)."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        if len(self.samples) == 0:
            raise DataError("empty audio segment")
        if self.sample_rate_hz <= 0:
            raise DataError(f"non-positive sample rate {self.sample_rate_hz}")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass
class Corpus:
    stories: list[StoryRecord]
    class_counts: dict[str, dict[Label, int]] = field(default_factory=dict)
    minority_sets: dict[str, set[Label]] = field(default_factory=dict)
    sidecar_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.class_counts:
            self.refresh_stats()

    def refresh_stats(self) -> None:
        """Recompute per-task class counts and minority sets from the stories."""
        self.class_counts = {}
        self.minority_sets = {}
        for task in TASKS:
            counts = {lab: 0 for lab in LABELS}
            for story in self.stories:
                lab = story.label(task)
                if lab is not None:
                    counts[lab] += 1
            self.class_counts[task] = counts
            self.minority_sets[task] = minority_set(counts)

    @property
    def labeled_stories(self) -> list[StoryRecord]:
        return [s for s in self.stories if s.labeled]

    def subset(self, story_ids: set[str]) -> "Corpus":
        kept = [s for s in self.stories if s.story_id in story_ids]
        return Corpus(stories=kept, sidecar_names=list(self.sidecar_names))

    def by_id(self, story_id: str) -> StoryRecord:
        for s in self.stories:
            if s.story_id == story_id:
                return s
        raise DataError(f"unknown story_id {story_id!r}")

    def speakers(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.stories:
            seen.setdefault(s.speaker_id, None)
        return list(seen)


def _parse_label(token: str, row: int, col: str) -> Label | None:
    token = token.strip()
    if not token:
        return None
    try:
        return Label.from_token(token)
    except DataError as exc:
        raise DataError(f"manifest row {row}, column {col!r}: {exc}") from None


def load_manifest(path: str | Path) -> Corpus:
    """Load a manifest CSV into a validated Corpus.

    Fails with a descriptive message naming the offending row and field on
    duplicate story ids, unknown label tokens, or missing referenced files.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    base = path.parent
    stories: list[StoryRecord] = []
    seen_ids: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != MANIFEST_FIELDS:
            raise DataError(
                f"manifest {path}: bad header {reader.fieldnames}, expected {MANIFEST_FIELDS}"
            )
        for rownum, row in enumerate(reader, start=2):
            sid = (row["story_id"] or "").strip()
            if not sid:
                raise DataError(f"manifest row {rownum}: empty story_id")
            if sid in seen_ids:
                raise DataError(f"manifest row {rownum}: duplicate story_id {sid!r}")
            seen_ids.add(sid)
            chunks: list[Path] = []
            for part in (row["chunk_paths"] or "").split(";"):
                part = part.strip()
                if not part:
                    continue
                chunk = (base / part).resolve()
                if not chunk.is_file():
                    raise DataError(
                        f"manifest row {rownum}, column 'chunk_paths': missing chunk {part!r}"
                    )
                chunks.append(chunk)
            texts: dict[str, str] = {}
            for col in ("transcript_de_path", "transcript_en_path"):
                rel = (row[col] or "").strip()
                if not rel:
                    texts[col] = ""
                    continue
                tpath = (base / rel).resolve()
                if not tpath.is_file():
                    raise DataError(
                        f"manifest row {rownum}, column {col!r}: missing transcript {rel!r}"
                    )
                texts[col] = tpath.read_text(encoding="utf-8")
            valence = _parse_label(row["valence"] or "", rownum, "valence")
            arousal = _parse_label(row["arousal"] or "", rownum, "arousal")
            if (valence is None) != (arousal is None):
                raise DataError(
                    f"manifest row {rownum}: a labeled record needs both labels "
                    f"(valence={row['valence']!r}, arousal={row['arousal']!r})"
                )
            stories.append(
                StoryRecord(
                    story_id=sid,
                    speaker_id=(row["speaker_id"] or "").strip(),
                    audio_chunks=chunks,
                    transcript_de=texts["transcript_de_path"],
                    transcript_en=texts["transcript_en_path"],
                    valence=valence,
                    arousal=arousal,
                )
            )
    return Corpus(stories=stories)


def save_manifest(corpus: Corpus, out_dir: str | Path) -> Path:
    """Write a corpus back to ``out_dir/manifest.csv`` plus transcript files.

    Audio chunks are referenced in place (relative when under out_dir),
    so loading the result reproduces the records field by field.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tdir = out_dir / "transcripts"
    tdir.mkdir(exist_ok=True)
    manifest = out_dir / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for s in corpus.stories:
            de_rel = ""
            en_rel = ""
            if s.transcript_de or s.transcript_en:
                de = tdir / f"{s.story_id}.de.txt"
                en = tdir / f"{s.story_id}.en.txt"
                de.write_text(s.transcript_de, encoding="utf-8")
                en.write_text(s.transcript_en, encoding="utf-8")
                de_rel = de.relative_to(out_dir).as_posix()
                en_rel = en.relative_to(out_dir).as_posix()
            parts = []
            for chunk in s.audio_chunks:
                try:
                    parts.append(chunk.resolve().relative_to(out_dir.resolve()).as_posix())
                except ValueError:
                    parts.append(str(chunk.resolve()))
            writer.writerow(
                [
                    s.story_id,
                    s.speaker_id,
                    ";".join(parts),
                    de_rel,
                    en_rel,
                    "" if s.valence is None else str(s.valence),
                    "" if s.arousal is None else str(s.arousal),
                ]
            )
    return manifest


def read_audio(path: str | Path) -> AudioSegment:
    """Read a RIFF/WAVE PCM16 mono file, scaling samples by 1/32768."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise DataError(f"{path}: compressed WAV ({wf.getcomptype()}) is not supported")
            if wf.getnchannels() != 1:
                raise DataError(f"{path}: expected mono, got {wf.getnchannels()} channels")
            if wf.getsampwidth() != 2:
                raise DataError(f"{path}: expected 16-bit PCM, got {8 * wf.getsampwidth()}-bit")
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise DataError(f"{path}: not a readable RIFF/WAVE file ({exc})") from exc
    except EOFError as exc:
        raise DataError(f"{path}: truncated WAV header") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if samples.size == 0:
        raise DataError(f"{path}: zero-length audio payload")
    return AudioSegment(samples=samples, sample_rate_hz=rate)


def write_audio(path: str | Path, samples: np.ndarray, sample_rate_hz: int) -> None:
    """Write float samples in [-1, 1] as PCM16 mono WAV (inverse of read_audio)."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 32767.0 / 32768.0)
    ints = np.round(clipped * 32768.0).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate_hz)
        wf.writeframes(ints.tobytes())


def load_sidecar(path: str | Path, corpus: Corpus) -> Corpus:
    """Attach named real-valued sidecar features (CSV keyed by story_id).

    Unknown story ids are skipped with a warning; duplicate rows are
    last-write-wins; non-numeric cells are an error. The pipeline treats
    the values as opaque.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"sidecar not found: {path}")
    known = {s.story_id: s for s in corpus.stories}
    names: list[str] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            log.warning("sidecar %s is empty; corpus unchanged", path)
            return corpus
        if not header or header[0] != "story_id":
            raise DataError(f"sidecar {path}: first column must be 'story_id', got {header[:1]}")
        names = [h.strip() for h in header[1:]]
        if not names:
            log.warning("sidecar %s has no feature columns; corpus unchanged", path)
            return corpus
        for rownum, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(names) + 1:
                raise DataError(
                    f"sidecar row {rownum}: expected {len(names) + 1} cells, got {len(row)}"
                )
            sid = row[0].strip()
            if sid not in known:
                log.warning("sidecar row %d: story_id %r not in corpus, skipped", rownum, sid)
                continue
            if sid in seen:
                log.warning("sidecar row %d: duplicate story_id %r, last write wins", rownum, sid)
            seen.add(sid)
            feats: dict[str, float] = {}
            for name, cell in zip(names, row[1:]):
                try:
                    feats[name] = float(cell)
                except ValueError:
                    raise DataError(
                        f"sidecar row {rownum}, column {name!r}: non-numeric cell {cell!r}"
                    ) from None
            known[sid].sidecar = feats
    corpus.sidecar_names = names
    return corpus
