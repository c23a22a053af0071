"""Sparse 1-D filtering operators shared by the metrics and their gradients.

Every spatial operation in the metrics (blur, decimation, zero-insertion
upsampling, valid Gaussian windows, mean pooling) is separable, so it is
expressed as a pair of sparse matrices applied along rows and columns. The
adjoint needed for reverse-mode gradients is then just the transpose.

Boundary extension is whole-sample symmetric ("mirror"): ``c b | a b c | b a``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

BINOMIAL5 = (0.05, 0.25, 0.4, 0.25, 0.05)


def mirror_index(n: int, pad: int) -> np.ndarray:
    """Source index for each position ``-pad .. n + pad - 1`` of a mirrored axis."""
    pos = np.arange(-pad, n + pad)
    if n == 1:
        return np.zeros_like(pos)
    period = 2 * (n - 1)
    pos = np.mod(pos, period)
    return np.where(pos >= n, period - pos, pos)


@lru_cache(maxsize=256)
def filter_matrix(n: int, kernel: tuple[float, ...]) -> sp.csr_matrix:
    """Same-size correlation with ``kernel`` under mirror extension, as an n x n matrix."""
    k = np.asarray(kernel, dtype=float)
    r = len(k) // 2
    src = mirror_index(n, r)
    rows = np.repeat(np.arange(n), len(k))
    cols = src[np.arange(n)[:, None] + np.arange(len(k))[None, :]].ravel()
    vals = np.tile(k, n)
    # duplicates (mirrored taps landing on one source) are summed by csr conversion
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@lru_cache(maxsize=256)
def valid_filter_matrix(n: int, kernel: tuple[float, ...]) -> sp.csr_matrix:
    """Correlation restricted to positions where the window fits, (n - K + 1) x n."""
    k = np.asarray(kernel, dtype=float)
    m = n - len(k) + 1
    if m < 1:
        raise ValueError(f"axis of length {n} is shorter than the {len(k)}-tap window")
    rows = np.repeat(np.arange(m), len(k))
    cols = (np.arange(m)[:, None] + np.arange(len(k))[None, :]).ravel()
    return sp.csr_matrix((np.tile(k, m), (rows, cols)), shape=(m, n))


@lru_cache(maxsize=256)
def downsample_matrix(n: int) -> sp.csr_matrix:
    """Binomial blur followed by keeping every other sample: ceil(n/2) x n."""
    return filter_matrix(n, BINOMIAL5)[::2].tocsr()


@lru_cache(maxsize=256)
def upsample_matrix(n_fine: int) -> sp.csr_matrix:
    """Zero insertion to ``n_fine`` samples followed by a gain-2 binomial blur."""
    n_coarse = (n_fine + 1) // 2
    zeros = sp.csr_matrix(
        (np.ones(n_coarse), (2 * np.arange(n_coarse), np.arange(n_coarse))),
        shape=(n_fine, n_coarse),
    )
    gain2 = tuple(2.0 * v for v in BINOMIAL5)
    return (filter_matrix(n_fine, gain2) @ zeros).tocsr()


@lru_cache(maxsize=256)
def pool_matrix(n: int) -> sp.csr_matrix:
    """2-sample mean pooling, floor(n/2) x n (a trailing odd sample is dropped)."""
    m = n // 2
    rows = np.repeat(np.arange(m), 2)
    cols = np.arange(2 * m)
    return sp.csr_matrix((np.full(2 * m, 0.5), (rows, cols)), shape=(m, n))


@lru_cache(maxsize=32)
def gaussian_kernel(size: int, sigma: float) -> tuple[float, ...]:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return tuple(g / g.sum())


def apply_sep(rows: sp.spmatrix, cols: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    """``rows @ x @ cols.T`` with dense output."""
    return np.asarray((cols @ (rows @ x).T).T)


def apply_sep_t(rows: sp.spmatrix, cols: sp.spmatrix, g: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`apply_sep`: ``rows.T @ g @ cols``."""
    return np.asarray((cols.T @ (rows.T @ g).T).T)


def conv2_mirror(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D convolution of ``x`` with a small odd-sized kernel, mirror boundaries."""
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    h, w = x.shape
    xp = x[np.ix_(mirror_index(h, ry), mirror_index(w, rx))]
    flipped = kernel[::-1, ::-1]
    out = np.zeros_like(x, dtype=float)
    for i in range(kh):
        for j in range(kw):
            if flipped[i, j] != 0:
                out += flipped[i, j] * xp[i : i + h, j : j + w]
    return out


def conv2_mirror_t(g: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`conv2_mirror` with respect to its image argument."""
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    h, w = g.shape
    flipped = kernel[::-1, ::-1]
    gp = np.zeros((h + 2 * ry, w + 2 * rx))
    for i in range(kh):
        for j in range(kw):
            if flipped[i, j] != 0:
                gp[i : i + h, j : j + w] += flipped[i, j] * g
    # fold the padded border back onto the samples it mirrors
    folded_rows = np.zeros((h, gp.shape[1]))
    np.add.at(folded_rows, mirror_index(h, ry), gp)
    out = np.zeros((h, w))
    np.add.at(out.T, mirror_index(w, rx), folded_rows.T)
    return out
