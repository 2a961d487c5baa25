"""Reconstruction quality measures: D-MSE, windowed SSIM and PSNR."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import AllFlatTruth, DimensionMismatch, GridTooSmall, IdenticalInputs
from .grid import normalize


@dataclass(frozen=True)
class SsimConfig:
    window: int = 11
    c1: float = 1e-4
    c2: float = 3e-4

    def __post_init__(self):
        if self.window < 1 or self.window % 2 != 1:
            raise ValueError("window must be a positive odd integer")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("c1 and c2 must be positive")


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def d_mse(rec, truth) -> float:
    """Squared error of the time differences, divided by the jump count of ``truth``."""
    rec, truth = _pair(rec, truth)
    if rec.ndim == 1:
        rec, truth = rec[:, None], truth[:, None]
    gt = truth[:-1] - truth[1:]
    nnz = np.count_nonzero(gt)
    if nnz == 0:
        raise AllFlatTruth("truth has no nonzero time differences")
    diff = (rec[:-1] - rec[1:]) - gt
    return float(np.sum(diff * diff) / nnz)


def ssim(a, b, cfg: SsimConfig | None = None) -> float:
    """Mean SSIM over all fully interior windows of the globally normalized grids.

    Window statistics use the unbiased sample (co)variance.
    """
    cfg = cfg or SsimConfig()
    a, b = _pair(a, b)
    w = cfg.window
    if a.ndim != 2 or a.shape[0] < w or a.shape[1] < w:
        raise GridTooSmall(f"grid {a.shape} smaller than a {w}x{w} window")
    a = normalize(a)[0]
    b = normalize(b)[0]
    n = w * w
    h = w // 2
    inner = (slice(h, a.shape[0] - h), slice(h, a.shape[1] - h))

    def box(v):
        return uniform_filter(v, size=w, mode="constant")[inner]

    mu_a, mu_b = box(a), box(b)
    corr = n / (n - 1) if n > 1 else 1.0
    var_a = (box(a * a) - mu_a * mu_a) * corr
    var_b = (box(b * b) - mu_b * mu_b) * corr
    cov = (box(a * b) - mu_a * mu_b) * corr
    num = (2 * mu_a * mu_b + cfg.c1) * (2 * cov + cfg.c2)
    den = (mu_a * mu_a + mu_b * mu_b + cfg.c1) * (var_a + var_b + cfg.c2)
    return float(np.mean(num / den))


def psnr(clean, noisy) -> float:
    """``10 log10(max|clean|^2 / mse)`` in dB."""
    clean, noisy = _pair(clean, noisy)
    mse = float(np.mean((clean - noisy) ** 2))
    if mse == 0:
        raise IdenticalInputs("PSNR is infinite for identical inputs")
    peak = float(np.max(np.abs(clean)))
    return 10.0 * np.log10(peak * peak / mse)


def add_noise_to_psnr(clean, target_psnr: float, seed: int):
    """White Gaussian noise scaled so that ``psnr(clean, noisy) == target_psnr``.

    Returns:
        tuple: ``(noisy, delta)`` with ``delta = |noisy - clean|_2``.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if not np.isfinite(target_psnr):
        raise ValueError("target_psnr must be finite")
    peak = float(np.max(np.abs(clean)))
    if peak == 0:
        raise ValueError("clean grid is identically zero")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(clean.shape)
    mse = peak * peak / 10.0 ** (target_psnr / 10.0)
    noise *= np.sqrt(mse * clean.size) / np.linalg.norm(noise)
    noisy = clean + noise
    return noisy, float(np.linalg.norm(noisy - clean))
