"""Fit a grid to a target by projected gradient descent on a chosen metric.

This is the small-scale version of "use a perceptual metric as the training
loss": instead of training a network, the signal itself is optimized, starting
from uniform noise, so the artifacts each loss favours can be inspected
directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from spectral_percept import gradients as G
from spectral_percept import metrics as M

__all__ = ["FitConfig", "FitResult", "FitError", "LOSSES", "fit_spectrogram", "fit_report"]

STEP_FLOOR = 1e-8
STEP_GROWTH = 1.2
PATIENCE = 10


class FitError(RuntimeError):
    """Loss or gradient became non-finite during a fit."""


def _neg_ms_ssim(a, b):
    return -M.ms_ssim(a, b)


LOSSES = {
    "mse": (M.mse, G.grad_mse),
    "nlpd": (M.nlpd, G.grad_nlpd),
    "neg_ms_ssim": (_neg_ms_ssim, G.grad_neg_ms_ssim),
}


@dataclass(frozen=True)
class FitConfig:
    loss: str = "mse"
    max_steps: int = 2000
    initial_step: float = 0.1
    seed: int = 0
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; choose from {sorted(LOSSES)}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")


@dataclass
class FitResult:
    final: np.ndarray
    loss_trajectory: list[float] = field(default_factory=list)
    steps_taken: int = 0
    converged: bool = False


def _check(value, grad, step):
    if not np.isfinite(value):
        raise FitError(f"non-finite loss at step {step}")
    if grad is not None and not np.all(np.isfinite(grad)):
        raise FitError(f"non-finite gradient at step {step}")


def fit_spectrogram(target, cfg: FitConfig = FitConfig(), x0=None) -> FitResult:
    """Minimize ``cfg.loss(x, target)`` over grids ``x`` in [0, 1].

    ``x`` starts at ``Uniform[0, 1]`` noise drawn from ``cfg.seed`` (or at
    ``x0`` if given). Each step proposes ``clip(x - eta * grad, 0, 1)``;
    the proposal is accepted only if it does not increase the loss, after
    which ``eta`` grows by 1.2, otherwise ``eta`` is halved and the step
    retried. The fit stops after ``max_steps`` accepted steps, when ``eta``
    drops below 1e-8, when the projected gradient vanishes, or after ten
    consecutive accepted steps each improving the loss by less than
    ``tolerance``.

    Only accepted losses are recorded, starting with the initial one, so the
    trajectory is non-increasing.
    """
    target = np.asarray(target, dtype=float)
    if target.ndim != 2:
        raise ValueError("target must be a 2-D grid")
    if target.min() < 0 or target.max() > 1:
        raise ValueError("target values must lie in [0, 1]")
    loss_fn, grad_fn = LOSSES[cfg.loss]

    if x0 is None:
        x = np.random.default_rng(cfg.seed).random(target.shape)
    else:
        x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
        if x.shape != target.shape:
            raise ValueError(f"x0 shape {x.shape} does not match target {target.shape}")

    loss = loss_fn(x, target)
    _check(loss, None, 0)
    trajectory = [float(loss)]
    eta = cfg.initial_step
    steps = 0
    stalled = 0
    converged = False

    while steps < cfg.max_steps:
        grad = grad_fn(x, target)
        _check(loss, grad, steps)
        if np.array_equal(np.clip(x - grad, 0.0, 1.0), x):
            converged = True
            break
        while eta >= STEP_FLOOR:
            candidate = np.clip(x - eta * grad, 0.0, 1.0)
            new_loss = loss_fn(candidate, target)
            _check(new_loss, None, steps + 1)
            if new_loss <= loss:
                break
            eta *= 0.5
        else:
            converged = True
            break

        improvement = loss - new_loss
        x, loss = candidate, new_loss
        trajectory.append(float(loss))
        steps += 1
        eta *= STEP_GROWTH
        stalled = stalled + 1 if improvement < cfg.tolerance else 0
        if stalled >= PATIENCE:
            converged = True
            break

    return FitResult(final=x, loss_trajectory=trajectory, steps_taken=steps, converged=converged)


def fit_report(result: FitResult, target, ms_params=None, nlpd_params=None) -> M.MetricReport:
    """MSE, NLPD and MS-SSIM between the fitted grid and the target."""
    return M.compare(result.final, target, ms_params, nlpd_params)
