"""Log-mel spectrograms in [0, 1], their inversion, and the SGRAM file format.

Forward path: STFT magnitude -> triangular HTK mel projection -> ``ln(x + eps)``
-> per-spectrogram min/max scaling to [0, 1] -> crop/pad to a fixed number of
frames. The log range is kept on the :class:`Spectrogram` so the scaling can
be undone; the mel projection is undone with its pseudo-inverse and phase is
recovered with Griffin-Lim.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from functools import lru_cache
from os import PathLike

import numpy as np

from spectral_percept import _linops as lo
from spectral_percept.audio import AudioClip

__all__ = [
    "MelParams",
    "Spectrogram",
    "MelFilterError",
    "SgramError",
    "SgramMagicError",
    "SgramTruncatedError",
    "SgramVersionError",
    "hz_to_mel",
    "mel_to_hz",
    "stft",
    "istft",
    "stft_magnitude",
    "mel_filterbank",
    "mel_spectrogram",
    "scale_log_mel",
    "unscale",
    "invert_mel",
    "griffin_lim",
    "initial_phase",
    "mel_band_centers",
    "consistency_residual",
    "save_sgram",
    "load_sgram",
    "is_sgram",
    "SGRAM_HEADER",
]


class MelFilterError(ValueError):
    """The requested mel filterbank cannot be built at this FFT resolution."""


@dataclass(frozen=True)
class MelParams:
    sample_rate: int = 16000
    n_fft: int = 1024
    hop: int = 260
    n_mels: int = 256
    eps: float = 0.001
    target_frames: int = 256

    def __post_init__(self):
        for name in ("sample_rate", "n_fft", "hop", "n_mels", "target_frames"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.hop > self.n_fft:
            raise ValueError(f"hop {self.hop} exceeds n_fft {self.n_fft}")
        if self.n_mels > self.n_fft // 2 + 1:
            raise ValueError(f"n_mels {self.n_mels} exceeds the {self.n_fft // 2 + 1} FFT bins")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def n_freqs(self) -> int:
        return self.n_fft // 2 + 1


@dataclass
class Spectrogram:
    """Scaled log-mel grid, ``n_mels`` rows (lowest band first) by frames.

    ``values`` are float32 in [0, 1]; ``log_lo``/``log_hi`` are the natural-log
    range that was mapped onto [0, 1] and are float32-representable so that a
    save/load round trip is exact.
    """

    values: np.ndarray
    params: MelParams = field(default_factory=MelParams)
    log_lo: float = 0.0
    log_hi: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise ValueError("spectrogram values must be 2-D")
        if self.log_lo > self.log_hi:
            raise ValueError("log_lo must not exceed log_hi")
        if self.values.shape[0] != self.params.n_mels:
            raise ValueError(
                f"{self.values.shape[0]} rows but params.n_mels = {self.params.n_mels}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


# --------------------------------------------------------------------------- #
# STFT


def _window(n_fft: int) -> np.ndarray:
    # periodic Hann
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n_fft) / n_fft)


def _samples(x) -> np.ndarray:
    return np.asarray(x.samples if isinstance(x, AudioClip) else x, dtype=float)


def stft(x, n_fft: int, hop: int) -> np.ndarray:
    """Complex STFT, ``(n_fft // 2 + 1, 1 + len // hop)``.

    Periodic Hann window; the signal is mirror-padded by ``n_fft // 2`` on
    both sides so frame ``t`` is centered on sample ``t * hop``.
    """
    x = _samples(x)
    if x.ndim != 1 or len(x) < 1:
        raise ValueError("need a non-empty 1-D signal")
    pad = n_fft // 2
    xp = x[lo.mirror_index(len(x), pad)]
    n_frames = 1 + len(x) // hop
    frames = np.lib.stride_tricks.sliding_window_view(xp, n_fft)[::hop][:n_frames]
    return np.fft.rfft(frames * _window(n_fft), axis=1).T


def istft(spec: np.ndarray, n_fft: int, hop: int, length: int | None = None) -> np.ndarray:
    """Least-squares signal whose :func:`stft` is closest to ``spec``.

    This is the exact projection for the padded STFT used here: windowed
    overlap-add, with the mirrored padding folded back onto the samples it
    copies, divided by the matching sum of squared windows. ``length``
    defaults to ``(frames - 1) * hop``.
    """
    n_frames = spec.shape[1]
    if length is None:
        length = (n_frames - 1) * hop
    if 1 + length // hop != n_frames:
        raise ValueError(f"length {length} is inconsistent with {n_frames} frames")
    pad = n_fft // 2
    win = _window(n_fft)
    frames = np.fft.irfft(spec.T, n=n_fft, axis=1) * win
    total = length + 2 * pad
    ola = np.zeros(total)
    wss = np.zeros(total)
    for t in range(n_frames):
        s = t * hop
        ola[s : s + n_fft] += frames[t]
        wss[s : s + n_fft] += win**2
    src = lo.mirror_index(length, pad)
    num = np.bincount(src, weights=ola, minlength=length)
    den = np.bincount(src, weights=wss, minlength=length)
    out = np.zeros(length)
    ok = den > 1e-12
    out[ok] = num[ok] / den[ok]
    return out


def stft_magnitude(clip, n_fft: int, hop: int) -> np.ndarray:
    return np.abs(stft(clip, n_fft, hop))


# --------------------------------------------------------------------------- #
# mel


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_band_centers(n_mels: int, sample_rate: int) -> np.ndarray:
    """Center frequency (Hz) of each triangular filter."""
    pts = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2), n_mels + 2))
    return pts[1:-1]


@lru_cache(maxsize=16)
def _filterbank(n_mels: int, n_fft: int, sample_rate: int, fill_empty: bool) -> np.ndarray:
    n_freqs = n_fft // 2 + 1
    if n_mels < 1:
        raise MelFilterError("n_mels must be positive")
    if n_mels > n_freqs:
        raise MelFilterError(f"{n_mels} mel bands cannot be resolved by {n_freqs} FFT bins")
    freqs = np.linspace(0.0, sample_rate / 2, n_freqs)
    pts = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2), n_mels + 2))
    left, center, right = pts[:-2, None], pts[1:-1, None], pts[2:, None]
    rising = (freqs - left) / (center - left)
    falling = (right - freqs) / (right - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))

    empty = np.flatnonzero(fb.sum(axis=1) == 0)
    if empty.size:
        if not fill_empty:
            raise MelFilterError(
                f"mel filters {empty.tolist()} contain no FFT bin "
                f"(n_mels={n_mels}, n_fft={n_fft}, sample_rate={sample_rate})"
            )
        # a triangle narrower than the bin spacing samples its nearest bin
        bin_hz = sample_rate / n_fft
        nearest = np.clip(np.round(pts[1:-1][empty] / bin_hz).astype(int), 0, n_freqs - 1)
        fb[empty, nearest] = 1.0
    fb.setflags(write=False)
    return fb


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int, fill_empty: bool = True) -> np.ndarray:
    """Triangular HTK-scale filterbank, ``(n_mels, n_fft // 2 + 1)``, peak height 1.

    Filter centers are equally spaced in mel between 0 Hz and Nyquist. At low
    frequencies a triangle can fall between two FFT bins; with ``fill_empty``
    such a filter takes unit weight on the bin nearest its center, otherwise
    :class:`MelFilterError` is raised. ``n_mels`` larger than the number of
    bins always raises.
    """
    return _filterbank(int(n_mels), int(n_fft), int(sample_rate), bool(fill_empty))


@lru_cache(maxsize=16)
def _pinv(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    p = np.linalg.pinv(mel_filterbank(n_mels, n_fft, sample_rate))
    p.setflags(write=False)
    return p


def _f32(v: float) -> float:
    return float(np.float32(v))


def scale_log_mel(mel: np.ndarray, params: MelParams) -> Spectrogram:
    """``ln(mel + eps)`` mapped onto [0, 1] by its own min and max (no cropping)."""
    logm = np.log(np.asarray(mel, dtype=float) + params.eps)
    log_lo, log_hi = _f32(logm.min()), _f32(logm.max())
    if log_hi - log_lo < 1e-12:
        values = np.zeros_like(logm)
    else:
        values = np.clip((logm - log_lo) / (log_hi - log_lo), 0.0, 1.0)
    return Spectrogram(values, replace(params, target_frames=logm.shape[1]), log_lo, log_hi)


def _fit_frames(values: np.ndarray, n: int) -> np.ndarray:
    width = values.shape[1]
    if width >= n:
        start = (width - n) // 2
        return values[:, start : start + n]
    return np.pad(values, ((0, 0), (0, n - width)))


def mel_spectrogram(clip: AudioClip, params: MelParams = MelParams()) -> Spectrogram:
    """Scaled log-mel spectrogram of exactly ``n_mels x target_frames``.

    The log range is taken over all frames; the time axis is then center-
    cropped (or right-padded with zeros) to ``params.target_frames``.
    """
    if clip.sample_rate != params.sample_rate:
        raise ValueError(
            f"clip is sampled at {clip.sample_rate} Hz, parameters expect {params.sample_rate} Hz"
        )
    mag = stft_magnitude(clip, params.n_fft, params.hop)
    mel = mel_filterbank(params.n_mels, params.n_fft, params.sample_rate) @ mag
    full = scale_log_mel(mel, params)
    return Spectrogram(_fit_frames(full.values, params.target_frames), params, full.log_lo, full.log_hi)


def unscale(spec: Spectrogram) -> np.ndarray:
    """Undo the [0, 1] scaling and the log: the (non-negative) mel power grid.

    ``exp(l) - eps`` is evaluated as ``eps * expm1(l - ln eps)``. Values below
    ``1e-6 * eps`` are below what the float32 log range can resolve and are
    returned as 0.
    """
    eps = spec.params.eps
    logm = spec.log_lo + spec.values.astype(float) * (spec.log_hi - spec.log_lo)
    mel = eps * np.expm1(logm - np.log(eps))
    mel[mel < 1e-6 * eps] = 0.0
    return mel


def invert_mel(spec: Spectrogram) -> np.ndarray:
    """Linear-frequency magnitudes from a scaled mel spectrogram (pseudo-inverse, clamped at 0)."""
    p = spec.params
    lin = _pinv(p.n_mels, p.n_fft, p.sample_rate) @ unscale(spec)
    return np.maximum(lin, 0.0)


# --------------------------------------------------------------------------- #
# Griffin-Lim


def consistency_residual(x, mag: np.ndarray, n_fft: int, hop: int) -> float:
    """``|| |STFT(x)| - mag ||`` over the full (Hermitian) spectrum.

    Bins strictly between DC and Nyquist count twice, which is the norm in
    which :func:`istft` is an orthogonal projection.
    """
    return _residual_from(stft(x, n_fft, hop), mag, n_fft)


def _unit_phase(spec: np.ndarray) -> np.ndarray:
    a = np.abs(spec)
    out = np.ones_like(spec)
    nz = a > 0
    out[nz] = spec[nz] / a[nz]
    return out


def initial_phase(mag: np.ndarray, n_fft: int, hop: int, init: str = "zero", seed: int = 0) -> np.ndarray:
    """Unit-modulus starting phases for :func:`griffin_lim`.

    ``"zero"``: zero phase with respect to absolute time. In the frame-local
    convention of :func:`stft` this is bin ``k`` of frame ``t`` rotated by
    ``2 pi k t hop / n_fft``.
    ``"frame"``: zero phase with respect to each frame's first sample.
    ``"random"``: uniform phases drawn from ``seed``.
    """
    if init == "zero":
        k = np.arange(mag.shape[0])[:, None]
        t = np.arange(mag.shape[1])[None, :]
        # reduce k * t * hop mod n_fft in integers so large indices stay exact
        return np.exp(2j * np.pi * np.mod(k * t * hop, n_fft) / n_fft)
    if init == "frame":
        return np.ones(mag.shape, dtype=complex)
    if init == "random":
        rng = np.random.default_rng(seed)
        return np.exp(2j * np.pi * rng.random(mag.shape))
    raise ValueError(f"unknown init {init!r}; expected 'zero', 'frame' or 'random'")


def griffin_lim(
    mag: np.ndarray,
    n_fft: int,
    hop: int,
    iters: int = 32,
    seed: int = 0,
    sample_rate: int = 16000,
    init: str = "zero",
    residuals: list | None = None,
) -> AudioClip:
    """Griffin-Lim phase retrieval.

    Starts from :func:`initial_phase` (zero phase by default; ``seed`` only
    matters for ``init="random"``), then alternates least-squares inversion
    and magnitude replacement ``iters`` times. The returned clip has
    ``(frames - 1) * hop`` samples.

    If ``residuals`` is a list, the consistency residual of each iterate
    (initial one included) is appended to it; the sequence is non-increasing.
    """
    if iters < 0:
        raise ValueError("iters must be non-negative")
    mag = np.asarray(mag, dtype=float)
    if mag.ndim != 2 or mag.shape[0] != n_fft // 2 + 1:
        raise ValueError(f"magnitude must have {n_fft // 2 + 1} rows for n_fft={n_fft}")

    x = istft(mag * initial_phase(mag, n_fft, hop, init, seed), n_fft, hop)
    for _ in range(iters):
        rebuilt = stft(x, n_fft, hop)
        if residuals is not None:
            residuals.append(_residual_from(rebuilt, mag, n_fft))
        x = istft(mag * _unit_phase(rebuilt), n_fft, hop)
    if residuals is not None:
        residuals.append(consistency_residual(x, mag, n_fft, hop))
    return AudioClip(x, sample_rate)


def _residual_from(rebuilt: np.ndarray, mag: np.ndarray, n_fft: int) -> float:
    diff = np.abs(rebuilt) - mag
    weight = np.full(diff.shape[0], 2.0)
    weight[0] = 1.0
    if n_fft % 2 == 0:
        weight[-1] = 1.0
    return float(np.sqrt(np.sum(weight[:, None] * diff**2)))


# --------------------------------------------------------------------------- #
# SGRAM files

SGRAM_MAGIC = b"SGRM"
SGRAM_VERSION = 1
SGRAM_HEADER = struct.Struct("<4sBIIffII")


class SgramError(ValueError):
    """Base class for unreadable SGRAM files."""


class SgramMagicError(SgramError):
    pass


class SgramTruncatedError(SgramError):
    pass


class SgramVersionError(SgramError):
    pass


def save_sgram(spec: Spectrogram, path: str | PathLike) -> None:
    """Write ``spec`` as SGRAM: 29-byte little-endian header, then float32 rows."""
    h, w = spec.shape
    header = SGRAM_HEADER.pack(
        SGRAM_MAGIC,
        SGRAM_VERSION,
        h,
        w,
        spec.log_lo,
        spec.log_hi,
        spec.params.sample_rate,
        spec.params.hop,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(spec.values, dtype="<f4").tobytes())


def _params_for(h: int, w: int, sample_rate: int, hop: int) -> MelParams:
    # n_fft and eps are not stored; use the defaults, widening n_fft only if required
    n_fft = MelParams.n_fft
    while n_fft // 2 + 1 < h or n_fft < hop:
        n_fft *= 2
    return MelParams(sample_rate=sample_rate, n_fft=n_fft, hop=hop, n_mels=h, target_frames=w)


def load_sgram(path: str | PathLike) -> Spectrogram:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 or data[:4] != SGRAM_MAGIC:
        raise SgramMagicError(f"{path}: bad magic, not an SGRAM file")
    if len(data) < SGRAM_HEADER.size:
        raise SgramTruncatedError(f"{path}: truncated header")
    _, version, h, w, log_lo, log_hi, sample_rate, hop = SGRAM_HEADER.unpack_from(data)
    if version != SGRAM_VERSION:
        raise SgramVersionError(f"{path}: SGRAM version {version}, expected {SGRAM_VERSION}")
    need = SGRAM_HEADER.size + 4 * h * w
    if len(data) < need:
        raise SgramTruncatedError(f"{path}: {len(data)} bytes, expected {need}")
    values = np.frombuffer(data, dtype="<f4", count=h * w, offset=SGRAM_HEADER.size)
    values = values.reshape(h, w).astype(np.float32)
    return Spectrogram(values, _params_for(h, w, sample_rate, hop), float(log_lo), float(log_hi))


def is_sgram(path: str | PathLike) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == SGRAM_MAGIC
