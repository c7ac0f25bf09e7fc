"""Measurement guidance added to the posterior-mean estimate ``x_{0|t}``."""

from dataclasses import dataclass

import numpy as np

MODES = ("pinv", "transpose", "gradient", "none")
#: Gradient guidance costs 2n denoiser calls per step; refuse larger problems unless forced.
MAX_GRADIENT_DIM = 4096


@dataclass(frozen=True)
class GuidanceConfig:
    mode: str = "pinv"
    weight: float = 1.0
    fd_step: float = 1e-4
    force: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown guidance mode {self.mode!r}; expected one of {MODES}")
        if not np.isfinite(self.weight) or self.weight < 0:
            raise ValueError("guidance weight must be finite and >= 0")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be > 0")


def noisy_weight(weight, sigma_y, m):
    """Guidance weight shrunk for noisy measurements: ``weight / (1 + sigma_y^2 m)``."""
    return weight / (1.0 + sigma_y * sigma_y * m)


def guide_pinv(y, A, x0t):
    return A.pinv(y - A.apply(x0t))


def guide_transpose(y, A, x0t):
    return A.adjoint(y - A.apply(x0t))


def residual_norm2(y, A, x0t):
    r = A.apply(x0t) - y
    return float(r @ r)


def guide_gradient(y, A, x_t, denoise, h=1e-4, force=False):
    """Central finite-difference gradient of ``||y - A D(x_t)||^2`` with respect to ``x_t``.

    ``denoise`` maps an image ``x_t`` to ``x_{0|t}``. Costs ``2n`` calls.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be > 0")
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.size > MAX_GRADIENT_DIM and not force:
        raise ValueError(f"gradient guidance on n={x_t.size} > {MAX_GRADIENT_DIM}; pass force=True")
    flat = x_t.ravel()
    grad = np.empty(flat.size)
    probe = flat.copy()
    for i in range(flat.size):
        probe[i] = flat[i] + h
        up = residual_norm2(y, A, denoise(probe.reshape(x_t.shape)))
        probe[i] = flat[i] - h
        down = residual_norm2(y, A, denoise(probe.reshape(x_t.shape)))
        probe[i] = flat[i]
        grad[i] = (up - down) / (2.0 * h)
    return grad.reshape(x_t.shape)


def apply_guidance(x0t, g, weight):
    if np.shape(x0t) != np.shape(g):
        raise ValueError(f"guidance shape {np.shape(g)} != estimate shape {np.shape(x0t)}")
    return x0t + weight * g
