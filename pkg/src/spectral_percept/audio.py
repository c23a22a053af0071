"""WAV decoding, stereo downmix and band-limited resampling."""
from __future__ import annotations

import struct
import wave
from dataclasses import dataclass
from math import gcd
from os import PathLike

import numpy as np
from scipy import signal

__all__ = [
    "AudioClip",
    "AudioError",
    "AudioReadError",
    "WavFormatError",
    "UnsupportedEncodingError",
    "load_wav",
    "write_wav",
    "downmix",
    "resample",
]

_PCM = 1
_FLOAT = 3
_EXTENSIBLE = 0xFFFE

RESAMPLE_TAPS_PER_PHASE = 64
RESAMPLE_KAISER_BETA = 8.0


class AudioError(Exception):
    """Base class for audio decoding problems."""


class AudioReadError(AudioError):
    """The file could not be opened or read."""


class WavFormatError(AudioError):
    """The RIFF/WAVE structure is malformed."""


class UnsupportedEncodingError(AudioError):
    """Well-formed WAV with a sample encoding or channel layout we do not decode."""


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def downmix(samples: np.ndarray) -> np.ndarray:
    """Average channels of a ``(frames, channels)`` array; 1-D input is returned as is."""
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        return x
    if x.ndim != 2:
        raise ValueError("expected (frames,) or (frames, channels)")
    return x.mean(axis=1)


def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        yield cid, body
        pos += 8 + size + (size & 1)


def _decode_frames(raw: bytes, fmt: int, bits: int, channels: int) -> np.ndarray:
    width = bits // 8
    n = len(raw) // (width * channels)
    raw = raw[: n * width * channels]
    if fmt == _PCM and bits == 16:
        x = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
    elif fmt == _PCM and bits == 24:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v >= 1 << 23, v - (1 << 24), v)
        x = v.astype(float) / float(1 << 23)
    elif fmt == _FLOAT and bits == 32:
        x = np.frombuffer(raw, dtype="<f4").astype(float)
    else:
        kind = {_PCM: "PCM", _FLOAT: "float"}.get(fmt, f"format tag {fmt:#x}")
        raise UnsupportedEncodingError(f"unsupported encoding: {bits}-bit {kind}")
    return x.reshape(n, channels)


def load_wav(path: str | PathLike) -> AudioClip:
    """Decode a PCM16, PCM24 or float32 WAV (mono or stereo) to a mono clip.

    Integer PCM is scaled by the type's largest magnitude (32768, 2**23), so
    full negative scale maps to exactly -1. Stereo is averaged per sample.

    Raises:
        AudioReadError: the file cannot be read.
        WavFormatError: missing RIFF/WAVE header, ``fmt `` or ``data`` chunk.
        UnsupportedEncodingError: other bit depths, codecs or > 2 channels.
    """
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise AudioReadError(f"cannot read {path}: {exc}") from exc

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt_body = raw = None
    for cid, body in _chunks(data):
        if cid == b"fmt ":
            fmt_body = body
        elif cid == b"data":
            raw = body
            break
    if fmt_body is None or len(fmt_body) < 16:
        raise WavFormatError(f"{path}: missing or short fmt chunk")
    if raw is None:
        raise WavFormatError(f"{path}: missing data chunk")

    fmt, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt_body)
    if fmt == _EXTENSIBLE:
        if len(fmt_body) < 26:
            raise WavFormatError(f"{path}: truncated WAVE_FORMAT_EXTENSIBLE header")
        (fmt,) = struct.unpack_from("<H", fmt_body, 24)
    if channels not in (1, 2):
        raise UnsupportedEncodingError(f"{path}: {channels} channels (only mono/stereo)")
    if rate == 0 or bits % 8 or block_align != channels * bits // 8:
        raise WavFormatError(f"{path}: inconsistent fmt chunk")

    frames = _decode_frames(raw, fmt, bits, channels)
    return AudioClip(downmix(frames), int(rate))


def write_wav(clip: AudioClip, path: str | PathLike) -> None:
    """Write a mono 16-bit PCM WAV; samples are clipped to [-1, 1]."""
    pcm = np.round(np.clip(clip.samples, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(clip.sample_rate))
        w.writeframes(pcm.tobytes())


def _resample_filter(up: int, down: int) -> np.ndarray:
    """Kaiser-windowed sinc low-pass at the narrower Nyquist (unit DC gain;
    ``resample_poly`` applies the interpolation gain itself)."""
    phases = max(up, down)
    n_taps = RESAMPLE_TAPS_PER_PHASE * phases + 1
    h = signal.firwin(n_taps, 1.0 / phases, window=("kaiser", RESAMPLE_KAISER_BETA))
    return h


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Polyphase windowed-sinc resampling to ``target_rate``.

    The output has ``ceil(len * target / source)`` samples. Values are not
    clipped.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return AudioClip(clip.samples.copy(), clip.sample_rate)
    g = gcd(int(target_rate), int(clip.sample_rate))
    up, down = target_rate // g, clip.sample_rate // g
    y = signal.resample_poly(clip.samples, up, down, window=_resample_filter(up, down))
    return AudioClip(y, int(target_rate))
