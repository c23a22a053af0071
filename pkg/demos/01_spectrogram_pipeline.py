"""
From waveform to a 256 x 256 log-mel image
==========================================

A 4.208 s clip at 16 kHz is analysed with a 1024-point STFT, hop 260,
256 HTK mel bands, a log with eps = 0.001 and per-clip min-max scaling.
The result is the image the perceptual metrics are computed on.
"""

# %%
import numpy as np

from spectral_percept import AudioClip, mel_spectrogram, resample, stft_magnitude
from spectral_percept.signals import PMQD_SECONDS, music_like

# %% [markdown]
# Pretend the source was recorded at 48 kHz, so it has to be resampled first.

# %%
clip48 = music_like(PMQD_SECONDS, 48000, seed=0)
clip = resample(clip48, 16000)
print(len(clip48), "->", len(clip), "samples")

# %%
mag = stft_magnitude(clip, 1024, 260)
print("linear STFT:", mag.shape)  # 513 bins x 259 frames

spec = mel_spectrogram(clip)
print("log-mel image:", spec.shape, spec.values.dtype)
print("log range mapped to [0, 1]: [%.3f, %.3f]" % (spec.log_lo, spec.log_hi))

# %% [markdown]
# The 259 raw frames are centre-cropped to 256. A silent clip is a valid
# degenerate case: every value is 0 and the log range collapses to ln(eps).

# %%
silent = mel_spectrogram(AudioClip(np.zeros(len(clip)), 16000))
print(silent.values.max(), silent.log_lo, np.log(0.001))

# %%
# crude text rendering: mean energy per band group, low to high
groups = spec.values.reshape(16, 16, 256).mean(axis=(1, 2))
for i, g in enumerate(groups[::-1]):
    print(f"bands {255 - 16 * i:3d}-{240 - 16 * i:3d} " + "#" * int(40 * g))
