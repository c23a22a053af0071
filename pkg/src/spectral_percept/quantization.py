"""Soft (differentiable) and hard latent quantization, plus entropy accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuantizerSpec",
    "EntropyInputs",
    "soft_quantize",
    "soft_quantize_grad",
    "hard_quantize",
    "entropy_bound",
    "bits_per_pixel",
    "compression_ratio",
    "empirical_entropy",
]

SOURCE_BIT_DEPTH = 24


@dataclass(frozen=True)
class QuantizerSpec:
    centers: tuple[float, ...] = (-1.0, 1.0)
    s: float = 10.0

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        object.__setattr__(self, "centers", centers)
        if len(centers) < 2:
            raise ValueError("need at least two centers")
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise ValueError("centers must be strictly increasing")
        if not self.s > 0:
            raise ValueError("sharpness s must be positive")

    @property
    def L(self) -> int:
        return len(self.centers)


def _soft_weights(z: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    c = np.asarray(spec.centers)
    logits = -spec.s * (z[..., None] - c) ** 2
    logits -= logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def soft_quantize(z, spec: QuantizerSpec = QuantizerSpec()):
    """Softmax-weighted average of the centers, weights ``exp(-s (z - c_j)^2)``.

    With centers (-1, 1) this is exactly ``tanh(2 s z)``. The largest logit is
    subtracted before exponentiating, so large ``|z|`` or ``s`` cannot produce
    ``0/0``.
    """
    z_arr = np.asarray(z, dtype=float)
    out = _soft_weights(z_arr, spec) @ np.asarray(spec.centers)
    return float(out) if np.ndim(z) == 0 else out


def soft_quantize_grad(z, spec: QuantizerSpec = QuantizerSpec()):
    """Elementwise derivative of :func:`soft_quantize`: ``2 s`` times the
    variance of the centers under the softmax weights."""
    z_arr = np.asarray(z, dtype=float)
    c = np.asarray(spec.centers)
    w = _soft_weights(z_arr, spec)
    mean = w @ c
    var = w @ (c**2) - mean**2
    out = 2 * spec.s * var
    return float(out) if np.ndim(z) == 0 else out


def hard_quantize(z, spec: QuantizerSpec = QuantizerSpec()):
    """Nearest center; an exact midpoint goes to the lower center."""
    z_arr = np.asarray(z, dtype=float)
    c = np.asarray(spec.centers)
    # argmin returns the first minimum, i.e. the lower center on ties
    idx = np.argmin(np.abs(z_arr[..., None] - c), axis=-1)
    out = c[idx]
    return float(out) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class EntropyInputs:
    """Shape of an autoencoder latent: input W x H, n halvings, m channels, L centers."""

    W: int = 256
    H: int = 256
    n: int = 4
    m: int = 128
    L: int = 2

    def __post_init__(self):
        if self.W < 1 or self.H < 1 or self.m < 1:
            raise ValueError("W, H and m must be positive")
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.L < 2:
            raise ValueError("L must be at least 2")
        step = 2**self.n
        if self.W % step or self.H % step:
            raise ValueError(f"W={self.W} and H={self.H} must be divisible by 2**n = {step}")


def entropy_bound(inp: EntropyInputs = EntropyInputs()) -> float:
    """Maximum bits the quantized latent can carry: ``W H / 4**n * m * log2(L)``."""
    symbols = (inp.W // 2**inp.n) * (inp.H // 2**inp.n) * inp.m
    return symbols * math.log2(inp.L)


def bits_per_pixel(bound_bits: float, W: int, H: int) -> float:
    if W * H <= 0:
        raise ValueError("W * H must be positive")
    return bound_bits / (W * H)


def compression_ratio(bpp: float, source_bpp: float = SOURCE_BIT_DEPTH) -> float:
    """``source_bpp / bpp``; 24 bpp source at 0.5 bpp gives 48."""
    if bpp <= 0:
        raise ValueError("bpp must be positive")
    return source_bpp / bpp


def empirical_entropy(latent, spec: QuantizerSpec = QuantizerSpec()) -> float:
    """Plug-in Shannon entropy of the center histogram, times the element count.

    Every value must already sit exactly on a center; run :func:`hard_quantize`
    first otherwise.
    """
    values = np.asarray(latent, dtype=float).ravel()
    c = np.asarray(spec.centers)
    on_center = np.isin(values, c)
    if not np.all(on_center):
        bad = values[~on_center][:3]
        raise ValueError(f"values not on quantization centers, e.g. {bad.tolist()}")
    if values.size == 0:
        return 0.0
    counts = np.array([np.count_nonzero(values == v) for v in c])
    p = counts[counts > 0] / values.size
    return float(-(p * np.log2(p)).sum() * values.size) + 0.0
