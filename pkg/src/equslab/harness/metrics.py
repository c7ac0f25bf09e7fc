"""Restoration metrics: PSNR, SSIM and measurement consistency."""

import math

import numpy as np

from .. import _kernels

#: SSIM window side and stabilizer fractions of the data range.
SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(x, ref):
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    return x, ref


def mse(x, ref):
    x, ref = _pair(x, ref)
    return float(np.mean((x - ref) ** 2))


def psnr(x, ref, peak=1.0):
    """Peak signal-to-noise ratio in dB; ``inf`` when the images are identical."""
    if peak <= 0:
        raise ValueError("peak must be > 0")
    err = mse(x, ref)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _ssim_channel(a, b, win, c1, c2):
    mu_a = _kernels.window_means(a, win)
    mu_b = _kernels.window_means(b, win)
    var_a = _kernels.window_means(a * a, win) - mu_a * mu_a
    var_b = _kernels.window_means(b * b, win) - mu_b * mu_b
    cov = _kernels.window_means(a * b, win) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(x, ref, data_range=1.0, win=SSIM_WINDOW):
    """Mean SSIM over all ``win x win`` windows, averaged over channels.

    Uses uniform windows, population (biased) local statistics and the
    stabilizers ``C1 = (0.01 L)^2``, ``C2 = (0.03 L)^2``.
    """
    x, ref = _pair(x, ref)
    if x.ndim == 2:
        x, ref = x[:, :, None], ref[:, :, None]
    if x.shape[0] < win or x.shape[1] < win:
        raise ValueError(f"image {x.shape[:2]} smaller than the {win}x{win} SSIM window")
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    return float(np.mean([_ssim_channel(x[:, :, c], ref[:, :, c], win, c1, c2) for c in range(x.shape[2])]))


def cons(y, A, x0):
    """Measurement consistency ``||A x0 - y||^2``."""
    r = A.apply(x0) - np.asarray(y, dtype=np.float64).ravel()
    return float(r @ r)
