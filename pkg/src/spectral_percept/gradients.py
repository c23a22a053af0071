"""Hand-written reverse-mode gradients of the metrics w.r.t. their first argument.

Each ``grad_*`` function replays the forward computation of the matching
metric in :mod:`spectral_percept.metrics`, keeps the intermediates, and
walks back through them. :func:`finite_diff_grad` is the brute-force
central-difference oracle used to check them.
"""
from __future__ import annotations

from typing import Callable, Union

import numpy as np

from spectral_percept import _linops as lo
from spectral_percept import metrics as M

__all__ = [
    "grad_mse",
    "grad_ms_ssim",
    "grad_nlpd",
    "grad_neg_ms_ssim",
    "finite_diff_grad",
    "relative_error",
    "METRICS",
    "GRADIENTS",
]


def grad_mse(a, b) -> np.ndarray:
    a, b = M._as_pair(a, b)
    return 2.0 * (a - b) / a.size


def _ssim_scale_backward(x, y, params, g_lum_map, g_cs_map):
    """Gradient w.r.t. ``x`` of ``sum(g_lum*lum + g_cs*cs)`` at one scale."""
    h, w = x.shape
    gr = lo.valid_filter_matrix(h, params.kernel)
    gc = lo.valid_filter_matrix(w, params.kernel)
    mu_x, mu_y, s_xx, s_yy, s_xy = M._moments(x, y, params.kernel)
    c1, c2 = params.c1, params.c2

    a1 = 2 * mu_x * mu_y + c1
    b1 = mu_x * mu_x + mu_y * mu_y + c1
    a2 = 2 * (s_xy - mu_x * mu_y) + c2
    b2 = (s_xx - mu_x * mu_x) + (s_yy - mu_y * mu_y) + c2

    g_mu = np.zeros_like(mu_x)
    if g_lum_map is not None:
        g_mu += g_lum_map * (2 * mu_y / b1 - 2 * mu_x * a1 / b1**2)
    g_mu += g_cs_map * (-2 * mu_y / b2 + 2 * mu_x * a2 / b2**2)
    g_sxx = g_cs_map * (-a2 / b2**2)
    g_sxy = g_cs_map * (2 / b2)

    return (
        lo.apply_sep_t(gr, gc, g_mu)
        + 2 * x * lo.apply_sep_t(gr, gc, g_sxx)
        + y * lo.apply_sep_t(gr, gc, g_sxy)
    )


def grad_ms_ssim(a, b, params: M.MsSsimParams | None = None) -> np.ndarray:
    a, b = M._as_pair(a, b)
    params = params or M.MsSsimParams.for_shape(a.shape)
    M._check_window(a.shape, params, params.scales)

    # forward, keeping per-scale inputs and pooled statistics
    xs, ys, stats = [a], [b], []
    for k in range(params.scales):
        lum, cs = M._ssim_maps(xs[-1], ys[-1], params)
        if k == params.scales - 1:
            stats.append(np.mean(lum * cs))
        else:
            stats.append(np.mean(cs))
            xs.append(M._pool(xs[-1]))
            ys.append(M._pool(ys[-1]))

    weights = params.scale_weights
    terms = [M.spow(s, w) for s, w in zip(stats, weights)]
    # d(prod)/d(stat_k) = prod_{j != k} term_j * w_k |stat_k|^(w_k - 1)
    d_stats = []
    for k, (s, w) in enumerate(zip(stats, weights)):
        others = np.prod([t for j, t in enumerate(terms) if j != k])
        d_stats.append(others * w * np.abs(s) ** (w - 1))

    g = None
    for k in reversed(range(params.scales)):
        x, y = xs[k], ys[k]
        n_valid = (x.shape[0] - params.window_size + 1) * (x.shape[1] - params.window_size + 1)
        seed = d_stats[k] / n_valid
        if k == params.scales - 1:
            lum, cs = M._ssim_maps(x, y, params)
            g_x = _ssim_scale_backward(x, y, params, seed * cs, seed * lum)
        else:
            valid = (x.shape[0] - params.window_size + 1, x.shape[1] - params.window_size + 1)
            g_x = _ssim_scale_backward(x, y, params, None, np.full(valid, seed))
        if g is not None:
            h, w = x.shape
            g_x = g_x + lo.apply_sep_t(lo.pool_matrix(h), lo.pool_matrix(w), g)
        g = g_x
    return g


def grad_neg_ms_ssim(a, b, params: M.MsSsimParams | None = None) -> np.ndarray:
    return -grad_ms_ssim(a, b, params)


def _pyramid_adjoint(g_bands, g_low):
    """Adjoint of :func:`metrics.build_pyramid` applied to stage gradients."""
    g_level = g_low
    for g_band in reversed(g_bands):
        h, w = g_band.shape
        # band = level - up(down(level)); next level = down(level)
        g_coarse = g_level - lo.apply_sep_t(lo.upsample_matrix(h), lo.upsample_matrix(w), g_band)
        g_level = g_band + lo.apply_sep_t(lo.downsample_matrix(h), lo.downsample_matrix(w), g_coarse)
    return g_level


def grad_nlpd(a, b, params: M.NlpdParams | None = None) -> np.ndarray:
    a, b = M._as_pair(a, b)
    params = params or M.NlpdParams.for_shape(a.shape)
    pa = M.build_pyramid(a, params.levels)
    yb = M.divisive_normalize(M.build_pyramid(b, params.levels), params)
    p = params.exponent
    n_stages = params.levels + 1

    g_stages = []
    for z, zb_norm, sigma, filt in zip(pa.stages, yb.stages, params.sigmas, params.norm_filters):
        denom = sigma + lo.conv2_mirror(np.abs(z), filt)
        d = z / denom - zb_norm
        norm = M._stage_norm(d, p)
        if norm == 0.0:
            g_y = np.zeros_like(d)
        else:
            g_y = norm ** (1.0 - p) * np.abs(d) ** (p - 1) * np.sign(d) / (d.size * n_stages)
        # y = z / denom, denom = sigma + conv(|z|)
        g_denom = -g_y * z / denom**2
        g_z = g_y / denom + np.sign(z) * lo.conv2_mirror_t(g_denom, filt)
        g_stages.append(g_z)
    return _pyramid_adjoint(g_stages[:-1], g_stages[-1])


MetricFn = Callable[[np.ndarray, np.ndarray], float]

METRICS: dict[str, MetricFn] = {
    "mse": M.mse,
    "msssim": M.ms_ssim,
    "ms_ssim": M.ms_ssim,
    "nlpd": M.nlpd,
}

GRADIENTS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "mse": grad_mse,
    "msssim": grad_ms_ssim,
    "ms_ssim": grad_ms_ssim,
    "nlpd": grad_nlpd,
}


def finite_diff_grad(metric: Union[str, MetricFn], a, b, h: float) -> np.ndarray:
    """Central differences ``(f(a + h e_ij, b) - f(a - h e_ij, b)) / 2h`` for every cell.

    ``metric`` is a name from :data:`METRICS` or any callable ``f(a, b)``.
    Costs two metric evaluations per cell.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    f = METRICS[metric] if isinstance(metric, str) else metric
    a, b = M._as_pair(a, b)
    g = np.empty_like(a)
    x = a.copy()
    for idx in np.ndindex(a.shape):
        orig = x[idx]
        x[idx] = orig + h
        up = f(x, b)
        x[idx] = orig - h
        down = f(x, b)
        x[idx] = orig
        g[idx] = (up - down) / (2 * h)
    return g


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """Per-entry error scaled by the larger of the two gradients' max-abs values."""
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)))
    if scale == 0:
        return np.zeros_like(analytic)
    return np.abs(analytic - numeric) / scale
