"""Acoustic low-level descriptors: MFCC 0-24 and 13 RASTA-PLP cepstra.

Both extractors share the same framing, so a story's MFCC and RASTA-PLP
matrices always align frame by frame. With temporal deltas appended the
full stack is (25 + 13) * 2 = 76 descriptors per frame. All log arguments
are floored at LOG_FLOOR, so finite input can never produce NaN/Inf.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft
import scipy.signal

from .corpus import AudioSegment
from .errors import DataError, NumericalError

LOG_FLOOR = 1e-10
LP_ORDER = 12
N_MFCC = 25
N_PLP_CEPS = LP_ORDER + 1

# RASTA band-pass: FIR numerator over 5 log-spectral frames, single pole 0.94.
RASTA_NUMER = np.array([0.2, 0.1, 0.0, -0.1, -0.2])
RASTA_POLE = 0.94

_CACHE_MAGIC = b"AFPL"
_CACHE_VERSION = 1


@dataclass
class FrameConfig:
    """Short-time analysis parameters. Field-standard defaults for 16 kHz."""

    window_s: float = 0.025
    hop_s: float = 0.010
    window_fn: str = "hamming"
    mel_filters: int = 26
    fft_size: int = 512

    def __post_init__(self) -> None:
        if self.hop_s > self.window_s:
            raise DataError(f"hop {self.hop_s}s exceeds window {self.window_s}s")
        if self.fft_size & (self.fft_size - 1):
            raise DataError(f"fft_size {self.fft_size} is not a power of two")

    def window_samples(self, rate: int) -> int:
        return int(round(self.window_s * rate))

    def hop_samples(self, rate: int) -> int:
        return int(round(self.hop_s * rate))


@dataclass
class LldMatrix:
    """T x D frame-by-descriptor matrix with stable descriptor names."""

    frames: np.ndarray
    descriptor_names: list[str]
    frame_hop_s: float

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise DataError(f"LLD matrix must be T x D with T >= 1, got {self.frames.shape}")
        if self.frames.shape[1] != len(self.descriptor_names):
            raise DataError(
                f"{self.frames.shape[1]} columns but {len(self.descriptor_names)} names"
            )
        if not np.all(np.isfinite(self.frames)):
            raise NumericalError("LLD matrix contains NaN/Inf")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_descriptors(self) -> int:
        return self.frames.shape[1]


def _window(cfg: FrameConfig, nwin: int) -> np.ndarray:
    if cfg.window_fn == "hamming":
        return np.hamming(nwin)
    if cfg.window_fn == "hann":
        return np.hanning(nwin)
    if cfg.window_fn == "rect":
        return np.ones(nwin)
    raise DataError(f"unknown window function {cfg.window_fn!r}")


def frame_count(n_samples: int, nwin: int, nhop: int) -> int:
    return (n_samples - nwin) // nhop + 1


def _power_spectrum(seg: AudioSegment, cfg: FrameConfig) -> np.ndarray:
    """|rFFT|^2 per frame; shape (T, fft_size/2 + 1)."""
    nwin = cfg.window_samples(seg.sample_rate_hz)
    nhop = cfg.hop_samples(seg.sample_rate_hz)
    if len(seg.samples) < nwin:
        raise DataError(
            f"segment of {len(seg.samples)} samples shorter than one {nwin}-sample window"
        )
    if cfg.fft_size < nwin:
        raise DataError(f"fft_size {cfg.fft_size} smaller than window {nwin}")
    t = frame_count(len(seg.samples), nwin, nhop)
    idx = np.arange(nwin)[None, :] + nhop * np.arange(t)[:, None]
    frames = seg.samples[idx] * _window(cfg, nwin)[None, :]
    spec = np.fft.rfft(frames, n=cfg.fft_size, axis=1)
    return np.abs(spec) ** 2


def _hz_to_mel(hz: np.ndarray | float) -> np.ndarray | float:
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel: np.ndarray | float) -> np.ndarray | float:
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, fft_size: int, rate: int) -> np.ndarray:
    """Triangular mel filters over rFFT bins; shape (n_filters, fft_size/2+1)."""
    nyq = rate / 2.0
    mel_pts = np.linspace(0.0, _hz_to_mel(nyq), n_filters + 2)
    hz_pts = np.asarray(_mel_to_hz(mel_pts))
    bin_hz = np.arange(fft_size // 2 + 1) * rate / fft_size
    fb = np.zeros((n_filters, len(bin_hz)))
    for i in range(n_filters):
        lo, mid, hi = hz_pts[i], hz_pts[i + 1], hz_pts[i + 2]
        up = (bin_hz - lo) / max(mid - lo, 1e-12)
        down = (hi - bin_hz) / max(hi - mid, 1e-12)
        fb[i] = np.maximum(0.0, np.minimum(up, down))
    return fb


def extract_mfcc(seg: AudioSegment, cfg: FrameConfig) -> LldMatrix:
    """MFCCs 0-24: DCT-II (orthonormal) of log mel-filterbank energies."""
    pspec = _power_spectrum(seg, cfg)
    fb = mel_filterbank(cfg.mel_filters, cfg.fft_size, seg.sample_rate_hz)
    energies = pspec @ fb.T
    logE = np.log(np.maximum(energies, LOG_FLOOR))
    ceps = scipy.fft.dct(logE, type=2, norm="ortho", axis=1)[:, :N_MFCC]
    names = [f"mfcc{i}" for i in range(N_MFCC)]
    return LldMatrix(frames=ceps, descriptor_names=names, frame_hop_s=cfg.hop_s)


def _hz_to_bark(hz: np.ndarray | float) -> np.ndarray:
    return 6.0 * np.arcsinh(np.asarray(hz, dtype=np.float64) / 600.0)


def bark_filterbank(fft_size: int, rate: int) -> tuple[np.ndarray, np.ndarray]:
    """Critical-band (Bark) filters in the reference trapezoidal formulation.

    Returns (weights, band_center_hz); weights has shape (n_bands, fft/2+1).
    Slopes are +10 dB/Bark below and -25 dB/Bark above the flat 1-Bark top.
    """
    nyq_bark = float(_hz_to_bark(rate / 2.0))
    n_bands = int(np.ceil(nyq_bark)) + 1
    bin_barks = _hz_to_bark(np.arange(fft_size // 2 + 1) * rate / fft_size)
    step = nyq_bark / (n_bands - 1)
    centers_bark = step * np.arange(n_bands)
    wts = np.zeros((n_bands, len(bin_barks)))
    for i, mid in enumerate(centers_bark):
        lof = bin_barks - mid - 0.5
        hif = bin_barks - mid + 0.5
        wts[i] = 10.0 ** np.minimum(0.0, np.minimum(hif, -2.5 * lof))
    centers_hz = 600.0 * np.sinh(centers_bark / 6.0)
    return wts, centers_hz


def rasta_filter(log_bands: np.ndarray) -> np.ndarray:
    """Band-pass each band's log trajectory; time along axis 0.

    Per the reference formulation the first four output frames are used
    only to initialise the filter state and are emitted as zeros.
    """
    t = log_bands.shape[0]
    out = np.zeros_like(log_bands)
    if t <= 4:
        return out
    denom = np.array([1.0, -RASTA_POLE])
    zi0 = np.zeros((4, log_bands.shape[1]))
    _, zi = scipy.signal.lfilter(RASTA_NUMER, [1.0], log_bands[:4], axis=0, zi=zi0)
    rest, _ = scipy.signal.lfilter(RASTA_NUMER, denom, log_bands[4:], axis=0, zi=zi)
    out[4:] = rest
    return out


def equal_loudness(centers_hz: np.ndarray) -> np.ndarray:
    fsq = centers_hz**2
    ftmp = fsq / (fsq + 1.6e5)
    return ftmp**2 * ((fsq + 1.44e6) / (fsq + 9.61e6))


def levinson(r: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """Levinson-Durbin recursion. Returns (lpc a[0..order] with a[0]=1, error)."""
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = float(r[0])
    if err <= 0.0:
        raise NumericalError("non-positive zero-lag autocorrelation")
    for i in range(1, order + 1):
        acc = r[i] + float(np.dot(a[1:i], r[i - 1 : 0 : -1]))
        k = -acc / err
        a[1 : i + 1] = a[1 : i + 1] + k * a[i - 1 :: -1][: i]
        err *= 1.0 - k * k
        if err <= 0.0:
            raise NumericalError("non-positive prediction error in Levinson recursion")
    return a, err


def lpc_to_cepstrum(a: np.ndarray, err: float, n_out: int) -> np.ndarray:
    """Cepstra of the all-pole model spectrum err/|A|^2; c[0] = log(err)."""
    c = np.zeros(n_out)
    c[0] = np.log(err)
    order = len(a) - 1
    for n in range(1, n_out):
        acc = 0.0
        for j in range(1, n):
            if j <= order:
                acc += (n - j) * a[j] * c[n - j]
        an = a[n] if n <= order else 0.0
        c[n] = -(an + acc / n)
    return c


def extract_rasta_plp(seg: AudioSegment, cfg: FrameConfig) -> LldMatrix:
    """RASTA-PLP cepstra c0..c12 from 12th-order linear prediction.

    Chain: critical-band analysis -> log -> RASTA band-pass per band ->
    equal loudness + cube-root compression -> autocorrelation via inverse
    DFT -> Levinson-Durbin -> LPC-to-cepstrum.
    """
    pspec = _power_spectrum(seg, cfg)
    wts, centers_hz = bark_filterbank(cfg.fft_size, seg.sample_rate_hz)
    n_bands = wts.shape[0]
    if n_bands <= LP_ORDER:
        raise NumericalError(
            f"{n_bands} critical bands cannot support LP order {LP_ORDER}; raise the sample rate"
        )
    aspec = pspec @ wts.T
    log_bands = np.log(np.maximum(aspec, LOG_FLOOR))
    filtered = rasta_filter(log_bands)
    compressed = np.exp(filtered) * equal_loudness(centers_hz)[None, :]
    compressed = np.maximum(compressed, LOG_FLOOR) ** 0.33
    # duplicate edge bands before the inverse transform (reference practice)
    compressed[:, 0] = compressed[:, 1]
    compressed[:, -1] = compressed[:, -2]
    # symmetric spectrum -> real IDFT -> autocorrelation lags 0..LP_ORDER
    sym = np.concatenate([compressed, compressed[:, -2:0:-1]], axis=1)
    autoc = np.real(np.fft.ifft(sym, axis=1))[:, : LP_ORDER + 1]
    ceps = np.empty((pspec.shape[0], N_PLP_CEPS))
    for t in range(autoc.shape[0]):
        try:
            a, err = levinson(autoc[t], LP_ORDER)
        except NumericalError as exc:
            raise NumericalError(f"LP failure at frame {t}: {exc}") from exc
        ceps[t] = lpc_to_cepstrum(a, err, N_PLP_CEPS)
    names = [f"rastaplp{i}" for i in range(N_PLP_CEPS)]
    return LldMatrix(frames=ceps, descriptor_names=names, frame_hop_s=cfg.hop_s)


def append_deltas(lld: LldMatrix) -> LldMatrix:
    """Append standard +-2 frame regression deltas (edge replication)."""
    x = lld.frames
    padded = np.concatenate([x[:1], x[:1], x, x[-1:], x[-1:]], axis=0)
    deltas = (
        1.0 * (padded[3:-1] - padded[1:-3]) + 2.0 * (padded[4:] - padded[:-4])
    ) / 10.0
    names = lld.descriptor_names + [f"d_{n}" for n in lld.descriptor_names]
    return LldMatrix(
        frames=np.concatenate([x, deltas], axis=1),
        descriptor_names=names,
        frame_hop_s=lld.frame_hop_s,
    )


def stack_llds(parts: list[LldMatrix]) -> LldMatrix:
    """Column-wise concatenation of aligned descriptor blocks (e.g. MFCC + PLP)."""
    if not parts:
        raise DataError("no LLD blocks to stack")
    t = parts[0].n_frames
    for p in parts[1:]:
        if p.n_frames != t:
            raise DataError(f"frame count mismatch: {p.n_frames} vs {t}")
    names = [n for p in parts for n in p.descriptor_names]
    return LldMatrix(
        frames=np.concatenate([p.frames for p in parts], axis=1),
        descriptor_names=names,
        frame_hop_s=parts[0].frame_hop_s,
    )


def extract_story_llds(seg: AudioSegment, cfg: FrameConfig) -> LldMatrix:
    """Full 76-dim stack: (MFCC 0-24 | RASTA-PLP c0-c12) plus deltas."""
    base = stack_llds([extract_mfcc(seg, cfg), extract_rasta_plp(seg, cfg)])
    return append_deltas(base)


def pool_story(chunks: list[LldMatrix]) -> LldMatrix:
    """Row-wise concatenation of chunk matrices in chunk order."""
    if not chunks:
        raise DataError("no chunks to pool")
    first = chunks[0]
    for c in chunks[1:]:
        if c.descriptor_names != first.descriptor_names:
            raise DataError("cannot pool chunks with different descriptors")
    return LldMatrix(
        frames=np.concatenate([c.frames for c in chunks], axis=0),
        descriptor_names=list(first.descriptor_names),
        frame_hop_s=first.frame_hop_s,
    )


def save_lld(path: str | Path, lld: LldMatrix) -> None:
    """Binary LLD cache: magic, version, hop, T, D, row-major f64, names."""
    t, d = lld.frames.shape
    blob = "\n".join(lld.descriptor_names).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<IdQQQ", _CACHE_VERSION, lld.frame_hop_s, t, d, len(blob)))
        fh.write(np.ascontiguousarray(lld.frames, dtype="<f8").tobytes())
        fh.write(blob)


def load_lld(path: str | Path) -> LldMatrix:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CACHE_MAGIC:
            raise DataError(f"{path}: bad LLD cache magic {magic!r}")
        version, hop, t, d, nblob = struct.unpack("<IdQQQ", fh.read(36))
        if version != _CACHE_VERSION:
            raise DataError(f"{path}: unsupported LLD cache version {version}")
        frames = np.frombuffer(fh.read(8 * t * d), dtype="<f8").reshape(t, d).copy()
        names = fh.read(nblob).decode("utf-8").split("\n") if nblob else []
    return LldMatrix(frames=frames, descriptor_names=names, frame_hop_s=hop)
