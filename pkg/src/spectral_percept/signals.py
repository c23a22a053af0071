"""Synthetic test signals: pure tones and a short music-like excerpt."""
from __future__ import annotations

import numpy as np

from spectral_percept.audio import AudioClip

PMQD_SECONDS = 4.208


def tone(freq: float, seconds: float = PMQD_SECONDS, sample_rate: int = 16000, amplitude: float = 0.5) -> AudioClip:
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    return AudioClip(amplitude * np.sin(2 * np.pi * freq * t), sample_rate)


def music_like(seconds: float = PMQD_SECONDS, sample_rate: int = 16000, seed: int = 0) -> AudioClip:
    """A melody of harmonic notes with vibrato over a noisy percussion track.

    Deterministic for a given ``seed``. Peak amplitude is normalized to 0.8.
    """
    rng = np.random.default_rng(seed)
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    out = np.zeros(n)

    note_len = 0.35
    starts = np.arange(0.0, seconds, note_len)
    scale = 220.0 * 2 ** (np.array([0, 2, 4, 5, 7, 9, 11, 12]) / 12)
    for start in starts:
        f0 = rng.choice(scale)
        seg = (t >= start) & (t < start + note_len)
        tt = t[seg] - start
        env = np.minimum(1.0, tt / 0.02) * np.exp(-3.0 * tt)
        phase = 2 * np.pi * f0 * tt + 0.004 * f0 * np.sin(2 * np.pi * 5.5 * tt) / 5.5
        for h in range(1, 9):
            out[seg] += env * np.sin(h * phase) / h

    beat = 0.5
    for start in np.arange(0.0, seconds, beat):
        seg = (t >= start) & (t < start + 0.08)
        tt = t[seg] - start
        out[seg] += 0.6 * rng.standard_normal(seg.sum()) * np.exp(-tt / 0.015)
        out[seg] += 0.8 * np.sin(2 * np.pi * 60 * tt) * np.exp(-tt / 0.04)

    out *= 0.8 / np.max(np.abs(out))
    return AudioClip(out, sample_rate)
