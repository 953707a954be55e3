"""Image and disparity quality metrics.

PSNR/SSIM follow the usual SR evaluation conventions (SSIM: 11x11
Gaussian window, sigma 1.5, K1=0.01, K2=0.03, averaged over valid
windows); disparity quality uses MSE x 100 and BadPix(eps).
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    mse100: float | None = None
    badpix: dict = field(default_factory=dict)


def max_threads():
    """Parallelism cap from DISTG_THREADS (0 or unset = auto)."""
    raw = os.environ.get("DISTG_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        return os.cpu_count() or 1
    return n


def psnr(a, b, max_val=1.0):
    """10*log10(max^2 / MSE); identical inputs yield the inf sentinel."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / mse)


def _gaussian_window(size, sigma):
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def _window_mean(img, kernel):
    win = kernel.shape[0]
    views = sliding_window_view(img, (win, win))
    return np.tensordot(views, kernel, axes=([2, 3], [0, 1]))


def ssim(a, b, max_val=1.0, window=11, sigma=1.5, k1=0.01, k2=0.03):
    """Single-scale SSIM, mean over valid (fully inside) windows.

    The window shrinks to the largest odd size that fits when the image
    is smaller than 11 pixels on a side.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"ssim expects two equal-shape 2D images, got {a.shape} vs {b.shape}")
    win = min(window, min(a.shape))
    if win % 2 == 0:
        win -= 1
    if win < 1:
        raise ValueError("image too small for SSIM")
    kernel = _gaussian_window(win, sigma)
    c1 = (k1 * max_val) ** 2
    c2 = (k2 * max_val) ** 2
    mu_a = _window_mean(a, kernel)
    mu_b = _window_mean(b, kernel)
    var_a = _window_mean(a * a, kernel) - mu_a * mu_a
    var_b = _window_mean(b * b, kernel) - mu_b * mu_b
    cov = _window_mean(a * b, kernel) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def mse100(est, gt):
    """Mean squared error scaled by 100 (disparity benchmark convention)."""
    est, gt = np.asarray(est, dtype=np.float64), np.asarray(gt, dtype=np.float64)
    return float(np.mean((est - gt) ** 2) * 100.0)


def badpix(est, gt, eps=0.07):
    """Percentage of pixels with absolute error above eps."""
    est, gt = np.asarray(est, dtype=np.float64), np.asarray(gt, dtype=np.float64)
    return float(np.mean(np.abs(est - gt) > eps) * 100.0)


def lf_psnr_ssim(lf_a, lf_b, max_val=1.0):
    """Per-view PSNR/SSIM averaged over the view grid.

    Views with infinite PSNR (bit-identical) are excluded from the PSNR
    average with a warning. View computations may run on a small thread
    pool capped by DISTG_THREADS; aggregation order is fixed.
    """
    va, vb = lf_a.data, lf_b.data
    if va.shape != vb.shape:
        raise ValueError(f"light fields differ in shape: {va.shape} vs {vb.shape}")
    pairs = [(va[u, v], vb[u, v]) for u in range(va.shape[0]) for v in range(va.shape[1])]

    def one(pair):
        x, y = pair
        return psnr(x, y, max_val), ssim(x, y, max_val)

    n_workers = min(max_threads(), len(pairs))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, pairs))
    else:
        results = [one(p) for p in pairs]
    psnrs = [p for p, _ in results if math.isfinite(p)]
    if len(psnrs) < len(results):
        warnings.warn(
            f"{len(results) - len(psnrs)} identical view(s) excluded from the PSNR average",
            stacklevel=2,
        )
    mean_psnr = float(np.mean(psnrs)) if psnrs else math.inf
    mean_ssim = float(np.mean([s for _, s in results]))
    return mean_psnr, mean_ssim
