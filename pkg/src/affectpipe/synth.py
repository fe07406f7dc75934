"""Deterministic synthetic corpus generation.

The generator realizes the modality hypothesis the pipeline is built
around: arousal lives only in the audio (spectral tilt and energy of a
harmonic voice model) and valence only in the text (sentiment-word
choice against miniature bundled lexicons). Same seed, same corpus,
byte for byte: audio, parallel German/English transcripts, sidecar
features, embeddings, copied lexicon resources, and ready-to-run
pipeline configs.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Corpus, StoryRecord, save_manifest, write_audio
from .errors import DataError
from .labels import Label

log = logging.getLogger(__name__)

SAMPLE_RATE = 16000
EMBED_DIM = 50

# Word pool rows: (German lemma, German inflected variants, English word).
# The German side matches mini_sentiws.txt entries (variants are listed
# there as inflections), the English side matches mini_sentiwordnet.tsv
# under the POS tag the coarse tagger assigns.
STRONG_POS = (
    ("glücklich", ("glückliche", "glücklicher", "glückliches"), "happy"),
    ("wunderbar", ("wunderbare", "wunderbarer", "wunderbares"), "wonderful"),
    ("herrlich", ("herrliche", "herrlicher"), "glorious"),
    ("Liebe", ("Lieben",), "love"),
    ("Freude", ("Freuden",), "joy"),
    ("begeistert", ("begeisterte", "begeisterter"), "excited"),
)
MILD_POS = (
    ("angenehm", ("angenehme", "angenehmer"), "pleasant"),
    ("nett", ("nette", "netter", "nettes"), "nice"),
    ("ruhig", ("ruhige", "ruhiger"), "calm"),
    ("interessant", ("interessante", "interessanter"), "interesting"),
    ("ordentlich", ("ordentliche", "ordentlicher"), "tidy"),
    ("hell", ("helle", "heller", "helles"), "bright"),
)
STRONG_NEG = (
    ("schrecklich", ("schreckliche", "schrecklicher"), "terrible"),
    ("Angst", ("Ängste", "Ängsten"), "fear"),
    ("furchtbar", ("furchtbare", "furchtbarer"), "awful"),
    ("traurig", ("traurige", "trauriger", "trauriges"), "sad"),
    ("Schmerz", ("Schmerzen",), "pain"),
    ("verzweifelt", ("verzweifelte", "verzweifelter"), "desperate"),
)
MILD_NEG = (
    ("müde", ("müder", "müdes"), "tired"),
    ("grau", ("graue", "grauer", "graues"), "gray"),
    ("langsam", ("langsame", "langsamer"), "slow"),
    ("unruhig", ("unruhige", "unruhiger"), "restless"),
    ("kühl", ("kühle", "kühler", "kühles"), "cool"),
    ("schwer", ("schwere", "schwerer", "schweres"), "heavy"),
)
NEUTRAL = (
    ("Haus", "house"), ("Tisch", "table"), ("Straße", "street"), ("Tag", "day"),
    ("Jahr", "year"), ("Wasser", "water"), ("Stadt", "city"), ("Kind", "child"),
    ("Hand", "hand"), ("Fenster", "window"), ("Garten", "garden"), ("Morgen", "morning"),
    ("Abend", "evening"), ("Brot", "bread"), ("Baum", "tree"), ("Berg", "mountain"),
    ("Fluss", "river"), ("Zimmer", "room"), ("Schule", "school"), ("Markt", "market"),
)
CONNECTORS = (
    ("und", "and"), ("dann", "then"), ("der", "the"), ("die", "the"),
    ("das", "the"), ("wir", "we"), ("ich", "i"), ("es", "it"),
    ("war", "was"), ("ist", "is"), ("mit", "with"), ("in", "in"),
    ("auf", "on"), ("sehr", "very"),
)

# Per-word draw probabilities by valence; anything not drawn is neutral.
_VALENCE_DRAWS = {
    Label.H: ((0.25, STRONG_POS), (0.08, MILD_POS), (0.02, MILD_NEG)),
    Label.M: ((0.10, MILD_POS), (0.10, MILD_NEG)),
    Label.L: ((0.25, STRONG_NEG), (0.08, MILD_NEG), (0.02, MILD_POS)),
}
_POOL_POLARITY = {
    id(STRONG_POS): 1.0, id(MILD_POS): 0.4,
    id(MILD_NEG): -0.4, id(STRONG_NEG): -1.0,
}

# Arousal controls the harmonic rolloff exponent, the target RMS, the
# amplitude-modulation rate/depth (a speech-rate proxy), and how bright
# the aspiration noise is. Two properties of the design matter for
# speaker-independent evaluation. First, nuisance variation lives WITHIN
# each chunk rather than between speakers: every chunk glides over the
# same shared f0 range and carries the same slow tilt and loudness
# wobbles, while per-speaker colouring is a tiny multiplicative factor.
# Second, the frame-level wobbles are deliberately LARGER than the gap
# between adjacent class centres, so the classes overlap frame by frame
# and background models fitted on pooled frames form components shared
# across classes. The class then appears as a consistent displacement of
# a story's frames inside those shared components, which is exactly the
# kind of first-order statistic that aggregate encodings preserve. (If
# the classes were frame-separable, each component would be class-pure
# and the per-class expected statistics would vanish at the background
# model's optimum, leaving nothing but sampling noise to classify.)
# Story-level averages over several hundred frames still separate the
# classes cleanly because the wobbles average out within a chunk.
_AROUSAL_TILT = {Label.L: 2.0, Label.M: 1.2, Label.H: 0.4}
_AROUSAL_RMS = {Label.L: 0.045, Label.M: 0.10, Label.H: 0.22}
_AROUSAL_AM = {Label.L: (1.2, 2.5, 0.20), Label.M: (2.0, 4.0, 0.30), Label.H: (3.5, 6.5, 0.40)}
_AROUSAL_BRIGHT_NOISE = {Label.L: 0.01, Label.M: 0.03, Label.H: 0.07}
_F0_RANGE = (112.0, 184.0)
_VIBRATO_DEPTH = 0.02
_TILT_WOBBLE = 0.55
_LOUDNESS_WOBBLE = 0.5

SIDECAR_NAMES = (
    "vader_neg", "vader_neu", "vader_pos", "vader_compound",
    "textblob_polarity", "textblob_subjectivity", "flair_score",
)

_RESOURCE_FILES = {
    "mini_sentiws.txt": "sentiws.txt",
    "mini_sentiwordnet.tsv": "sentiwordnet.tsv",
    "stopwords_de.txt": "stopwords_de.txt",
    "stopwords_en.txt": "stopwords_en.txt",
}


@dataclasses.dataclass
class SynthResult:
    out_dir: Path
    manifest: Path
    corpus: Corpus
    configs: dict[str, Path]


def _label_sequence(rng: np.random.Generator, n: int) -> list[Label]:
    """Exact slightly-imbalanced class counts (30/45/25), shuffled."""
    n_low = round(0.30 * n)
    n_high = round(0.25 * n)
    base = [Label.L] * n_low + [Label.H] * n_high + [Label.M] * (n - n_low - n_high)
    return [base[i] for i in rng.permutation(n)]


def _chunk_audio(
    rng: np.random.Generator,
    duration_s: float,
    voice: float,
    tilt0: float,
    rms: float,
    am: tuple[float, float, float],
    bright: float,
) -> np.ndarray:
    """One voiced chunk: gliding harmonic stack with k^-tilt(t) rolloff.

    The fundamental glides geometrically between two endpoints drawn from
    the shared corpus-wide range, and the rolloff exponent wobbles slowly
    around `tilt0`, so the chunk itself sweeps out the nuisance variation.
    `voice` is the (small) per-speaker frequency colouring, `am` is
    (min rate, max rate, depth) of the amplitude modulation and `bright`
    scales a high-pass aspiration-noise component.
    """
    n = int(round(duration_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    f0_start = rng.uniform(*_F0_RANGE)
    f0_end = np.clip(f0_start * 2.0 ** rng.uniform(-0.25, 0.25), *_F0_RANGE)
    glide = f0_start * (f0_end / f0_start) ** (t / t[-1])
    vib_freq = rng.uniform(4.5, 6.5)
    vibrato = 1.0 + _VIBRATO_DEPTH * np.sin(2.0 * np.pi * vib_freq * t + rng.uniform(0, 2 * np.pi))
    inst = voice * glide * vibrato
    phase = 2.0 * np.pi * np.cumsum(inst) / SAMPLE_RATE
    n_harm = int(min(40, (0.475 * SAMPLE_RATE) // inst.max()))
    wob_freq = rng.uniform(0.6, 1.4)
    tilt = np.maximum(
        0.05, tilt0 + _TILT_WOBBLE * np.sin(2.0 * np.pi * wob_freq * t + rng.uniform(0, 2 * np.pi))
    )
    k = np.arange(1, n_harm + 1)
    amps = np.exp(-np.log(k)[:, None] * tilt[None, :])
    phases = k[:, None] * phase[None, :] + rng.uniform(0, 2 * np.pi, n_harm)[:, None]
    x = (amps * np.sin(phases)).sum(axis=0)
    am_lo, am_hi, am_depth = am
    am_freq = rng.uniform(am_lo, am_hi)
    x *= 1.0 + am_depth * np.sin(2.0 * np.pi * am_freq * t + rng.uniform(0, 2 * np.pi))
    loud_freq = rng.uniform(0.35, 0.9)
    x *= np.exp(_LOUDNESS_WOBBLE * np.sin(2.0 * np.pi * loud_freq * t + rng.uniform(0, 2 * np.pi)))
    fade = int(0.025 * SAMPLE_RATE)
    ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(fade) / fade))
    x[:fade] *= ramp
    x[-fade:] *= ramp[::-1]
    x *= rms / np.sqrt(np.mean(x**2))
    x += rng.normal(0.0, 0.03 * rms + 0.002, n)
    hiss = bright * float(np.exp(0.4 * rng.normal())) * rms
    x += hiss * np.diff(rng.normal(0.0, 1.0, n + 1))  # first difference: bright hiss
    return np.clip(x, -0.999, 0.999)


def _story_audio(
    rng: np.random.Generator, voice: float, arousal: Label
) -> list[np.ndarray]:
    tilt0 = _AROUSAL_TILT[arousal] + 0.03 * rng.normal()
    chunks = []
    for _ in range(2):
        rms = _AROUSAL_RMS[arousal] * float(np.exp(0.06 * rng.normal()))
        chunks.append(
            _chunk_audio(
                rng, rng.uniform(2.0, 2.5), voice, tilt0, rms,
                _AROUSAL_AM[arousal], _AROUSAL_BRIGHT_NOISE[arousal],
            )
        )
    return chunks


def _story_words(
    rng: np.random.Generator, valence: Label
) -> tuple[list[str], list[str], dict[str, int]]:
    """Parallel German/English word streams with valence-dependent sentiment."""
    draws = _VALENCE_DRAWS[valence]
    counts = {"strong_pos": 0, "mild_pos": 0, "strong_neg": 0, "mild_neg": 0, "total": 0}
    de_words: list[str] = []
    en_words: list[str] = []
    n_content = int(rng.integers(60, 91))
    for _ in range(n_content):
        u = rng.random()
        pool = None
        acc = 0.0
        for prob, candidate in draws:
            acc += prob
            if u < acc:
                pool = candidate
                break
        if pool is None:
            de, en = NEUTRAL[int(rng.integers(len(NEUTRAL)))]
        else:
            lemma, variants, en = pool[int(rng.integers(len(pool)))]
            de = lemma
            if variants and rng.random() < 0.3:
                de = variants[int(rng.integers(len(variants)))]
            polarity = _POOL_POLARITY[id(pool)]
            if polarity >= 1.0:
                counts["strong_pos"] += 1
            elif polarity > 0:
                counts["mild_pos"] += 1
            elif polarity <= -1.0:
                counts["strong_neg"] += 1
            else:
                counts["mild_neg"] += 1
        de_words.append(de)
        en_words.append(en)
        counts["total"] += 1
        if rng.random() < 0.35:
            de_c, en_c = CONNECTORS[int(rng.integers(len(CONNECTORS)))]
            de_words.append(de_c)
            en_words.append(en_c)
    return de_words, en_words, counts


def _render(words: list[str], rng: np.random.Generator) -> str:
    """Join words into sentences; punctuation is cosmetic for the tokenizer."""
    sentences: list[str] = []
    current: list[str] = []
    for word in words:
        current.append(word)
        if len(current) >= 6 and rng.random() < 0.18:
            sentences.append(" ".join(current))
            current = []
    if current:
        sentences.append(" ".join(current))
    rendered = [s[0].upper() + s[1:] for s in sentences]
    return ". ".join(rendered) + "."


def _sidecar_row(rng: np.random.Generator, counts: dict[str, int]) -> list[float]:
    """Noisy valence summaries as an external tool would emit them."""
    n = max(counts["total"], 1)
    pos = (counts["strong_pos"] + 0.5 * counts["mild_pos"]) / n
    neg = (counts["strong_neg"] + 0.5 * counts["mild_neg"]) / n
    vader_pos = float(np.clip(pos + 0.04 * rng.normal(), 0.0, 1.0))
    vader_neg = float(np.clip(neg + 0.04 * rng.normal(), 0.0, 1.0))
    vader_neu = float(np.clip(1.0 - vader_pos - vader_neg, 0.0, 1.0))
    compound = float(np.clip(np.tanh(4.0 * (pos - neg)) + 0.05 * rng.normal(), -1.0, 1.0))
    n_sent = (
        counts["strong_pos"] + counts["mild_pos"] + counts["strong_neg"] + counts["mild_neg"]
    )
    polarity = float(np.clip(
        (counts["strong_pos"] + counts["mild_pos"] - counts["strong_neg"] - counts["mild_neg"])
        / (n_sent + 1.0) + 0.05 * rng.normal(), -1.0, 1.0,
    ))
    subjectivity = float(np.clip(2.0 * n_sent / n + 0.05 * rng.normal(), 0.0, 1.0))
    flair = float(np.clip(np.tanh(3.0 * (pos - neg)) + 0.08 * rng.normal(), -1.0, 1.0))
    return [vader_neg, vader_neu, vader_pos, compound, polarity, subjectivity, flair]


def _vocabulary_polarity(lang_index: int) -> dict[str, float]:
    """Every surface the transcripts can emit, mapped to a polarity weight."""
    vocab: dict[str, float] = {}
    for pool, weight in (
        (STRONG_POS, 1.0), (MILD_POS, 0.4), (MILD_NEG, -0.4), (STRONG_NEG, -1.0),
    ):
        for lemma, variants, en in pool:
            if lang_index == 0:
                vocab[lemma] = weight
                for variant in variants:
                    vocab[variant] = weight
            else:
                vocab[en] = weight
    for pair in NEUTRAL + CONNECTORS:
        vocab[pair[lang_index]] = 0.0
    return vocab


def _write_embeddings(path: Path, vocab: dict[str, float], rng: np.random.Generator) -> None:
    direction = rng.normal(size=EMBED_DIM)
    direction /= np.linalg.norm(direction)
    words = sorted(vocab)
    lines = [f"{len(words)} {EMBED_DIM}"]
    for word in words:
        vec = rng.normal(0.0, 0.1, EMBED_DIM) + 0.5 * vocab[word] * direction
        lines.append(word + " " + " ".join(f"{v:.6f}" for v in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _copy_resources(out_dir: Path) -> None:
    res_dir = out_dir / "resources"
    res_dir.mkdir(parents=True, exist_ok=True)
    package_data = resources.files("affectpipe") / "data"
    for source, target in _RESOURCE_FILES.items():
        (res_dir / target).write_bytes((package_data / source).read_bytes())


_CONFIG_ACOUSTIC = """\
[corpus]
manifest = manifest.csv
workdir = work

[task]
name = arousal

[acoustic]
enabled = true
k_gmm = 16
pca_variance = 0.999
fv_pca_components = 150

[linguistic]
enabled = false

[classifier]
kind = kelm
kernel = linear
c_reg = 1.0

[cv]
folds = 4
inner_folds = 3
seed = {seed}
"""

_CONFIG_LINGUISTIC = """\
[corpus]
manifest = manifest.csv
workdir = work
sidecar = sidecar.csv
embeddings_de = resources/embeddings_de.txt
embeddings_en = resources/embeddings_en.txt
sentiws = resources/sentiws.txt
sentiwordnet = resources/sentiwordnet.tsv
stopwords_de = resources/stopwords_de.txt
stopwords_en = resources/stopwords_en.txt

[task]
name = valence

[acoustic]
enabled = false

[linguistic]
enabled = true
blocks = dictionary

[classifier]
kind = ridge-ovr
l2 = 0.000001

[cv]
folds = 4
inner_folds = 3
seed = {seed}
"""


def generate_corpus(
    out_dir: str | Path,
    seed: int = 7,
    n_speakers: int = 87,
    stories_per_speaker: int = 3,
) -> SynthResult:
    """Generate the full synthetic corpus tree under out_dir.

    Layout: manifest.csv, audio/, transcripts/, sidecar.csv, resources/
    (lexicons, stop words, embeddings), and two example configs. A fixed
    seed fixes every byte of every artifact.
    """
    if n_speakers < 2:
        raise DataError(f"need at least 2 speakers, got {n_speakers}")
    if stories_per_speaker < 1:
        raise DataError(f"need at least 1 story per speaker, got {stories_per_speaker}")
    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    audio_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    n_stories = n_speakers * stories_per_speaker
    valences = _label_sequence(rng, n_stories)
    arousals = _label_sequence(rng, n_stories)
    speaker_voice = rng.uniform(0.97, 1.03, n_speakers)

    stories: list[StoryRecord] = []
    sidecar_rows: list[tuple[str, list[float]]] = []
    story_index = 0
    for s in range(n_speakers):
        speaker_id = f"S{s + 1:03d}"
        for t in range(stories_per_speaker):
            story_id = f"{speaker_id}_T{t + 1}"
            valence = valences[story_index]
            arousal = arousals[story_index]
            story_index += 1

            chunk_paths: list[Path] = []
            for j, samples in enumerate(_story_audio(rng, float(speaker_voice[s]), arousal)):
                chunk = audio_dir / f"{story_id}.c{j}.wav"
                write_audio(chunk, samples, SAMPLE_RATE)
                chunk_paths.append(chunk)

            de_words, en_words, counts = _story_words(rng, valence)
            transcript_de = _render(de_words, rng)
            transcript_en = _render(en_words, rng)
            sidecar_rows.append((story_id, _sidecar_row(rng, counts)))
            stories.append(
                StoryRecord(
                    story_id=story_id,
                    speaker_id=speaker_id,
                    audio_chunks=chunk_paths,
                    transcript_de=transcript_de,
                    transcript_en=transcript_en,
                    valence=valence,
                    arousal=arousal,
                )
            )

    corpus = Corpus(stories=stories)
    manifest = save_manifest(corpus, out_dir)

    with (out_dir / "sidecar.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["story_id", *SIDECAR_NAMES])
        for story_id, row in sidecar_rows:
            writer.writerow([story_id, *(f"{v:.6f}" for v in row)])

    _copy_resources(out_dir)
    _write_embeddings(out_dir / "resources" / "embeddings_de.txt", _vocabulary_polarity(0), rng)
    _write_embeddings(out_dir / "resources" / "embeddings_en.txt", _vocabulary_polarity(1), rng)

    configs = {
        "acoustic": out_dir / "config_acoustic.ini",
        "linguistic": out_dir / "config_linguistic.ini",
    }
    configs["acoustic"].write_text(_CONFIG_ACOUSTIC.format(seed=seed), encoding="utf-8")
    configs["linguistic"].write_text(_CONFIG_LINGUISTIC.format(seed=seed), encoding="utf-8")

    log.info(
        "synthesized %d stories from %d speakers under %s",
        n_stories, n_speakers, out_dir,
    )
    return SynthResult(out_dir=out_dir, manifest=manifest, corpus=corpus, configs=configs)
