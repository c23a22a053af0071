"""Full-reference quality metrics on 2-D grids in [0, 1].

Three measures are provided: mean squared error, multi-scale structural
similarity (MS-SSIM) and the normalized Laplacian pyramid distance (NLPD).
All of them take plain ``numpy`` arrays and work in float64.

The spatial machinery lives in :mod:`spectral_percept._linops`; the gradient
module reuses the same operators so that forward and reverse passes agree
to round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from spectral_percept import _linops as lo

__all__ = [
    "MsSsimParams",
    "NlpdParams",
    "LaplacianPyramid",
    "MetricReport",
    "mse",
    "ssim",
    "ms_ssim",
    "build_pyramid",
    "collapse_pyramid",
    "divisive_normalize",
    "nlpd",
    "compare",
    "default_norm_filter",
    "max_pyramid_levels",
]

_MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def _as_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"expected 2-D grids, got shapes {a.shape} and {b.shape}")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def spow(x, w):
    """Signed power ``sign(x) * |x|**w``."""
    return np.sign(x) * np.abs(x) ** w


# --------------------------------------------------------------------------- #
# parameters


@dataclass(frozen=True)
class MsSsimParams:
    """Window, stabilizer and per-scale weight settings for (MS-)SSIM.

    The defaults are the usual ones for a dynamic range of 1: an 11x11
    Gaussian window with sigma 1.5, ``c1 = 0.01**2``, ``c2 = 0.03**2`` and the
    five-scale weights of Wang et al.
    """

    scales: int = 5
    scale_weights: tuple[float, ...] = _MS_SSIM_WEIGHTS
    window_size: int = 11
    window_sigma: float = 1.5
    c1: float = 0.01**2
    c2: float = 0.03**2

    def __post_init__(self):
        object.__setattr__(self, "scale_weights", tuple(float(w) for w in self.scale_weights))
        if self.scales < 1:
            raise ValueError("scales must be positive")
        if len(self.scale_weights) != self.scales:
            raise ValueError(
                f"{self.scales} scales need {self.scales} weights, got {len(self.scale_weights)}"
            )
        if any(w <= 0 for w in self.scale_weights):
            raise ValueError("scale weights must be positive")
        # the published five-scale weights sum to 1.0001
        if abs(sum(self.scale_weights) - 1.0) > 1e-3:
            raise ValueError("scale weights must sum to 1")
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise ValueError("window_size must be an odd positive integer")
        if self.window_sigma <= 0 or self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("window_sigma, c1 and c2 must be positive")

    @classmethod
    def for_shape(cls, shape: tuple[int, int], max_scales: int = 5) -> "MsSsimParams":
        """Default parameters truncated to as many scales as ``shape`` supports.

        A scale is usable when its (pooled) grid is still at least one window
        wide. The leading default weights are kept and renormalized to sum to 1.
        """
        base = cls()
        n = min(shape)
        scales = 0
        while scales < max_scales and n >= base.window_size:
            scales += 1
            n //= 2
        if scales == 0:
            raise ValueError(
                f"grid {tuple(shape)} is smaller than the {base.window_size}x{base.window_size} window"
            )
        if scales == base.scales:
            return base
        w = np.array(_MS_SSIM_WEIGHTS[:scales])
        return cls(scales=scales, scale_weights=tuple(w / w.sum()))

    @property
    def kernel(self) -> tuple[float, ...]:
        return lo.gaussian_kernel(self.window_size, self.window_sigma)


def default_norm_filter() -> np.ndarray:
    """5x5 binomial kernel with the center tap removed, renormalized to sum 1."""
    b = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
    k = np.outer(b, b)
    k[2, 2] = 0.0
    return k / k.sum()


@dataclass(frozen=True)
class NlpdParams:
    levels: int = 5
    sigmas: tuple[float, ...] = (0.17,) * 6
    norm_filters: tuple[np.ndarray, ...] = field(
        default_factory=lambda: tuple(default_norm_filter() for _ in range(6))
    )
    exponent: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        filters = tuple(np.asarray(f, dtype=float) for f in self.norm_filters)
        object.__setattr__(self, "norm_filters", filters)
        if self.levels < 1:
            raise ValueError("levels must be positive")
        if len(self.sigmas) != self.levels + 1 or len(filters) != self.levels + 1:
            raise ValueError(
                f"{self.levels} levels need {self.levels + 1} sigmas and filters, "
                f"got {len(self.sigmas)} and {len(filters)}"
            )
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be positive")
        for f in filters:
            if f.ndim != 2 or f.shape[0] % 2 == 0 or f.shape[1] % 2 == 0:
                raise ValueError("normalization filters must be 2-D with odd sides")
            if np.any(f < 0):
                raise ValueError("normalization filters must be non-negative")
        if self.exponent <= 0:
            raise ValueError("exponent must be positive")

    @classmethod
    def with_levels(cls, levels: int, sigma: float = 0.17, exponent: float = 2.0) -> "NlpdParams":
        k = levels + 1
        return cls(
            levels=levels,
            sigmas=(sigma,) * k,
            norm_filters=tuple(default_norm_filter() for _ in range(k)),
            exponent=exponent,
        )

    @classmethod
    def for_shape(cls, shape: tuple[int, int], max_levels: int = 5) -> "NlpdParams":
        return cls.with_levels(min(max_levels, max_pyramid_levels(shape)))


def max_pyramid_levels(shape: tuple[int, int]) -> int:
    """Largest ``levels`` with ``min(shape) / 2**levels >= 1``."""
    n = min(shape)
    if n < 2:
        raise ValueError(f"grid {tuple(shape)} is too small for a pyramid")
    return int(np.floor(np.log2(n)))


# --------------------------------------------------------------------------- #
# MSE and SSIM


def mse(a, b) -> float:
    a, b = _as_pair(a, b)
    return float(np.mean((a - b) ** 2))


def _moments(x, y, kernel):
    """Gaussian-weighted local moments over valid window positions."""
    h, w = x.shape
    gr = lo.valid_filter_matrix(h, kernel)
    gc = lo.valid_filter_matrix(w, kernel)
    mu_x = lo.apply_sep(gr, gc, x)
    mu_y = lo.apply_sep(gr, gc, y)
    s_xx = lo.apply_sep(gr, gc, x * x)
    s_yy = lo.apply_sep(gr, gc, y * y)
    s_xy = lo.apply_sep(gr, gc, x * y)
    return mu_x, mu_y, s_xx, s_yy, s_xy


def _ssim_maps(x, y, params: MsSsimParams):
    """Luminance and contrast-structure maps."""
    mu_x, mu_y, s_xx, s_yy, s_xy = _moments(x, y, params.kernel)
    var_x = s_xx - mu_x * mu_x
    var_y = s_yy - mu_y * mu_y
    cov = s_xy - mu_x * mu_y
    lum = (2 * mu_x * mu_y + params.c1) / (mu_x * mu_x + mu_y * mu_y + params.c1)
    cs = (2 * cov + params.c2) / (var_x + var_y + params.c2)
    return lum, cs


def _check_window(shape, params: MsSsimParams, scales: int):
    n = min(shape)
    if n < params.window_size:
        raise ValueError(f"grid {tuple(shape)} is smaller than the {params.window_size}-wide window")
    coarsest = n // 2 ** (scales - 1)
    if coarsest < params.window_size:
        raise ValueError(
            f"too many scales ({scales}) for a {tuple(shape)} grid: coarsest side "
            f"{coarsest} < window {params.window_size}"
        )


def ssim(a, b, params: MsSsimParams | None = None) -> float:
    """Mean SSIM index over all valid (unpadded) window positions."""
    a, b = _as_pair(a, b)
    params = params or MsSsimParams()
    _check_window(a.shape, params, 1)
    lum, cs = _ssim_maps(a, b, params)
    return float(np.mean(lum * cs))


def _pool(x):
    h, w = x.shape
    return lo.apply_sep(lo.pool_matrix(h), lo.pool_matrix(w), x)


def ms_ssim(a, b, params: MsSsimParams | None = None) -> float:
    """Multi-scale SSIM.

    Each scale contributes the mean contrast-structure index raised to its
    weight; the coarsest scale contributes the full SSIM mean (luminance
    times contrast-structure). Scales are separated by 2x2 mean pooling.
    Powers are signed, so anticorrelated content can make the result
    negative.

    If ``params`` is omitted the defaults are truncated to the number of
    scales the grid size allows (see :meth:`MsSsimParams.for_shape`).
    """
    a, b = _as_pair(a, b)
    params = params or MsSsimParams.for_shape(a.shape)
    _check_window(a.shape, params, params.scales)
    x, y = a, b
    value = 1.0
    for k, w in enumerate(params.scale_weights):
        lum, cs = _ssim_maps(x, y, params)
        if k == params.scales - 1:
            value *= spow(np.mean(lum * cs), w)
        else:
            value *= spow(np.mean(cs), w)
            x, y = _pool(x), _pool(y)
    return float(value)


# --------------------------------------------------------------------------- #
# Laplacian pyramid and NLPD


@dataclass
class LaplacianPyramid:
    """Band-pass levels (finest first) plus the low-pass residual."""

    bands: list[np.ndarray]
    lowpass: np.ndarray

    @property
    def stages(self) -> list[np.ndarray]:
        return [*self.bands, self.lowpass]

    def __len__(self) -> int:
        return len(self.bands)

    def __add__(self, other: "LaplacianPyramid") -> "LaplacianPyramid":
        return LaplacianPyramid(
            [x + y for x, y in zip(self.bands, other.bands, strict=True)],
            self.lowpass + other.lowpass,
        )


def _down(x):
    h, w = x.shape
    return lo.apply_sep(lo.downsample_matrix(h), lo.downsample_matrix(w), x)


def _up(x, shape):
    h, w = shape
    return lo.apply_sep(lo.upsample_matrix(h), lo.upsample_matrix(w), x)


def build_pyramid(x, levels: int) -> LaplacianPyramid:
    """Burt-Adelson Laplacian pyramid with the 5-tap binomial kernel.

    Band ``k`` has shape ``ceil(h / 2**k) x ceil(w / 2**k)``; the residual has
    the shape of level ``levels``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a 2-D grid")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if min(x.shape) / 2**levels < 1:
        raise ValueError(f"too many levels ({levels}) for a {x.shape} grid")
    bands = []
    current = x
    for _ in range(levels):
        coarse = _down(current)
        bands.append(current - _up(coarse, current.shape))
        current = coarse
    return LaplacianPyramid(bands, current)


def collapse_pyramid(p: LaplacianPyramid) -> np.ndarray:
    """Invert :func:`build_pyramid` by upsample-blur-add from the residual upward."""
    current = np.asarray(p.lowpass, dtype=float)
    for band in reversed(p.bands):
        expected = tuple((n + 1) // 2 for n in band.shape)
        if current.shape != expected:
            raise ValueError(
                f"inconsistent pyramid: level of shape {current.shape} cannot sit "
                f"under a band of shape {band.shape}"
            )
        current = band + _up(current, band.shape)
    return current


def divisive_normalize(p: LaplacianPyramid, params: NlpdParams) -> LaplacianPyramid:
    """Divide every coefficient by ``sigma_k + (filter_k * |z|)`` at its stage."""
    if len(p.bands) != params.levels:
        raise ValueError(f"pyramid has {len(p.bands)} bands, parameters expect {params.levels}")
    out = [
        z / (s + lo.conv2_mirror(np.abs(z), f))
        for z, s, f in zip(p.stages, params.sigmas, params.norm_filters)
    ]
    return LaplacianPyramid(out[:-1], out[-1])


def _stage_norm(d, exponent):
    return np.mean(np.abs(d) ** exponent) ** (1.0 / exponent)


def nlpd(a, b, params: NlpdParams | None = None) -> float:
    """Normalized Laplacian pyramid distance.

    Mean over the ``levels + 1`` stages of the per-stage root-mean-``exponent``
    difference between divisively normalized pyramid coefficients.
    """
    a, b = _as_pair(a, b)
    params = params or NlpdParams.for_shape(a.shape)
    ya = divisive_normalize(build_pyramid(a, params.levels), params)
    yb = divisive_normalize(build_pyramid(b, params.levels), params)
    per_stage = [_stage_norm(u - v, params.exponent) for u, v in zip(ya.stages, yb.stages)]
    return float(np.mean(per_stage))


# --------------------------------------------------------------------------- #
# report


@dataclass(frozen=True)
class MetricReport:
    mse: float
    nlpd: float
    ms_ssim: float

    def as_dict(self) -> dict[str, float]:
        return {"mse": self.mse, "nlpd": self.nlpd, "ms_ssim": self.ms_ssim}


def compare(
    a,
    b,
    ms_params: MsSsimParams | None = None,
    nlpd_params: NlpdParams | None = None,
) -> MetricReport:
    """All three metrics for one (reference, degraded) pair."""
    a, b = _as_pair(a, b)
    return MetricReport(
        mse=mse(a, b),
        nlpd=nlpd(a, b, nlpd_params),
        ms_ssim=ms_ssim(a, b, ms_params),
    )
