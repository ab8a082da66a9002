"""Image quality metrics over float images in [0, 1]."""

from __future__ import annotations

import numpy as np
from scipy.signal import convolve2d

from .core import Array

_PSNR_CAP_DB = 100.0
_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _check_pair(a, b) -> tuple:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: Array, b: Array) -> float:
    """Peak signal-to-noise ratio in dB, capped at 100 dB for MSE < 1e-10."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse < 1e-10:
        return _PSNR_CAP_DB
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_kernel(size: int, sigma: float) -> Array:
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    k = np.outer(g, g)
    return k / k.sum()


def _ssim_plane(a: Array, b: Array) -> float:
    kernel = _gaussian_kernel(_SSIM_WINDOW, _SSIM_SIGMA)
    mu_a = convolve2d(a, kernel, mode="valid")
    mu_b = convolve2d(b, kernel, mode="valid")
    mu_aa = convolve2d(a * a, kernel, mode="valid")
    mu_bb = convolve2d(b * b, kernel, mode="valid")
    mu_ab = convolve2d(a * b, kernel, mode="valid")
    var_a = mu_aa - mu_a ** 2
    var_b = mu_bb - mu_b ** 2
    cov = mu_ab - mu_a * mu_b
    c1 = _SSIM_K1 ** 2
    c2 = _SSIM_K2 ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a: Array, b: Array) -> float:
    """Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5),
    k1 = 0.01, k2 = 0.03, dynamic range 1. Color images average the
    per-channel scores."""
    a, b = _check_pair(a, b)
    if a.shape[0] < _SSIM_WINDOW or a.shape[1] < _SSIM_WINDOW:
        raise ValueError(f"images must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW} for SSIM")
    if a.ndim == 2:
        return _ssim_plane(a, b)
    if a.ndim == 3:
        return float(np.mean([_ssim_plane(a[..., ch], b[..., ch])
                              for ch in range(a.shape[2])]))
    raise ValueError(f"expected a 2D or 3D image, got shape {a.shape}")
