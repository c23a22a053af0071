"""
Checking analytic gradients against finite differences
======================================================

Each metric has a hand-written reverse-mode gradient. A central
difference needs two metric evaluations per cell, so it is only practical
on small grids, which is exactly what makes it a good oracle.
"""

# %%
import time

import numpy as np

from spectral_percept import gradients as G

rng = np.random.default_rng(0)
a, b = rng.random((32, 32)), rng.random((32, 32))

# %%
for name, h in [("mse", 1e-5), ("ms_ssim", 1e-4), ("nlpd", 1e-4)]:
    analytic = G.GRADIENTS[name](a, b)
    numeric = G.finite_diff_grad(name, a, b, h)
    err = G.relative_error(analytic, numeric)
    print(f"{name:8s} p99 error {np.percentile(err, 99):.1e}  max {err.max():.1e}")

# %% [markdown]
# Reverse mode costs a small constant multiple of one forward pass,
# whatever the grid size.

# %%
a, b = rng.random((256, 256)), rng.random((256, 256))
for name in ("ms_ssim", "nlpd"):
    f, g = G.METRICS[name], G.GRADIENTS[name]
    t0 = time.perf_counter(); f(a, b); tf = time.perf_counter() - t0
    t0 = time.perf_counter(); g(a, b); tg = time.perf_counter() - t0
    print(f"{name}: forward {tf * 1e3:.1f} ms, gradient {tg * 1e3:.1f} ms ({tg / tf:.1f}x)")
