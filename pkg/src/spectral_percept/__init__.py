"""Perceptual quality metrics for log-mel spectrograms.

MSE, MS-SSIM and NLPD on [0, 1] grids with analytic gradients, the log-mel
analysis/inversion pipeline they are applied to, a soft latent quantizer with
entropy accounting, and a projected-gradient fitting demo.
"""
from spectral_percept.audio import AudioClip, load_wav, resample, write_wav
from spectral_percept.fit import FitConfig, FitResult, fit_report, fit_spectrogram
from spectral_percept.gradients import finite_diff_grad, grad_ms_ssim, grad_mse, grad_nlpd
from spectral_percept.metrics import (
    LaplacianPyramid,
    MetricReport,
    MsSsimParams,
    NlpdParams,
    build_pyramid,
    collapse_pyramid,
    compare,
    divisive_normalize,
    ms_ssim,
    mse,
    nlpd,
    ssim,
)
from spectral_percept.quantization import (
    EntropyInputs,
    QuantizerSpec,
    bits_per_pixel,
    empirical_entropy,
    entropy_bound,
    hard_quantize,
    soft_quantize,
)
from spectral_percept.spectrogram import (
    MelParams,
    Spectrogram,
    griffin_lim,
    invert_mel,
    load_sgram,
    mel_filterbank,
    mel_spectrogram,
    save_sgram,
    stft_magnitude,
)

__version__ = "0.1.0"
