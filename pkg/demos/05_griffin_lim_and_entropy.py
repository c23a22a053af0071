"""
Back to audio, and how many bits a latent may carry
===================================================

The log-mel image is inverted with a mel pseudo-inverse and Griffin-Lim
phase retrieval. The second half works out the entropy budget of the
soft-quantized autoencoder latent.
"""

# %%
import numpy as np

from spectral_percept import griffin_lim, invert_mel, mel_spectrogram, ms_ssim
from spectral_percept import quantization as Q
from spectral_percept.signals import tone

spec = mel_spectrogram(tone(500.0))
mag = invert_mel(spec)

# %%
residuals = []
clip = griffin_lim(mag, 1024, 260, iters=32, residuals=residuals)
print("consistency residual:", " ".join(f"{r:.0f}" for r in residuals[::8]))

again = mel_spectrogram(clip)
print("ms_ssim(original, re-analysed) = %.3f" % ms_ssim(spec.values.astype(float), again.values.astype(float)))

# %% [markdown]
# Soft quantization with two centres is a tanh in disguise.

# %%
z = np.linspace(-0.2, 0.2, 5)
print(Q.soft_quantize(z), np.tanh(20 * z))

# %%
inp = Q.EntropyInputs()  # 256 x 256 input, 4 halvings, 128 channels, 2 centres
bits = Q.entropy_bound(inp)
bpp = Q.bits_per_pixel(bits, inp.W, inp.H)
print(f"{bits:.0f} bits, {bpp} bpp, {Q.compression_ratio(bpp):.0f}:1 against 24 bpp")

latent = Q.hard_quantize(np.random.default_rng(0).standard_normal((16, 16, 128)))
print("empirical entropy of a random latent: %.0f bits" % Q.empirical_entropy(latent))
