"""Noise schedules and DDPM/DDIM reverse-process arithmetic.

Images are plain ``float64`` arrays of shape ``(H, W, C)``; the flattened
layout is C-order, i.e. channel-interleaved.
"""

from dataclasses import dataclass

import numpy as np

#: Floor applied to ``sqrt(abar)`` and ``sqrt(1 - abar)`` before dividing.
EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step variances ``betas[t-1]`` for ``t = 1..T``.

    ``alpha_bar(0)`` is defined as 1 so that a jump to step 0 lands on the
    clean image.
    """

    betas: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 1:
            raise ValueError("betas must be a non-empty 1-D array")
        if not np.all((betas > 0) & (betas < 1)):
            raise ValueError("every beta must lie in (0, 1)")
        betas = betas.copy()
        betas.setflags(write=False)
        alphas = 1.0 - betas
        alphas.setflags(write=False)
        abar = np.empty(betas.size + 1)
        abar[0] = 1.0
        abar[1:] = np.cumprod(alphas)
        abar.setflags(write=False)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "_abar", abar)

    @property
    def T(self) -> int:
        return int(self.betas.size)

    @property
    def alpha_bars(self) -> np.ndarray:
        """``abar_t`` for ``t = 1..T``."""
        return self._abar[1:]

    def alpha_bar(self, t: int) -> float:
        t = int(t)
        if not 0 <= t <= self.T:
            raise ValueError(f"step {t} outside [0, {self.T}]")
        return float(self._abar[t])

    def beta(self, t: int) -> float:
        return float(self.betas[int(t) - 1])


def build_schedule(T: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linear beta ramp from ``beta_start`` to ``beta_end`` over ``T`` steps."""
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    return NoiseSchedule(np.linspace(beta_start, beta_end, int(T)))


def _check_step(t, sched):
    if not 1 <= int(t) <= sched.T:
        raise ValueError(f"step {t} outside [1, {sched.T}]")


def _same_shape(a, b, what):
    if np.shape(a) != np.shape(b):
        raise ValueError(f"{what}: shape {np.shape(a)} != {np.shape(b)}")


def forward_sample(x0, t, sched, noise):
    """Draw ``x_t`` given ``x0`` and a standard-normal ``noise`` of the same shape."""
    _same_shape(x0, noise, "forward_sample")
    _check_step(t, sched)
    ab = sched.alpha_bar(t)
    return np.sqrt(ab) * np.asarray(x0, dtype=np.float64) + np.sqrt(1.0 - ab) * np.asarray(noise, dtype=np.float64)


def estimate_x0(x_t, eps_hat, t, sched):
    """Clean-image estimate from a noise prediction."""
    _same_shape(x_t, eps_hat, "estimate_x0")
    ab = sched.alpha_bar(t)
    return (x_t - np.sqrt(1.0 - ab) * eps_hat) / max(np.sqrt(ab), EPS_FLOOR)


def score_eps_convert(value, t, sched, direction):
    """Map a score to a noise prediction (``"score->eps"``) or back (``"eps->score"``)."""
    s = np.sqrt(1.0 - sched.alpha_bar(t))
    if direction == "score->eps":
        return -s * np.asarray(value, dtype=np.float64)
    if direction == "eps->score":
        return -np.asarray(value, dtype=np.float64) / max(s, EPS_FLOOR)
    raise ValueError(f"unknown direction {direction!r}")


def ddim_sigma(t, t_next, sched, eta):
    """Stochastic std of a (possibly non-adjacent) DDIM jump ``t -> t_next``."""
    ab_t = sched.alpha_bar(t)
    ab_n = sched.alpha_bar(t_next)
    var = (1.0 - ab_n) / max(1.0 - ab_t, EPS_FLOOR) * (1.0 - ab_t / ab_n)
    return float(eta) * np.sqrt(max(var, 0.0))


def reverse_step(x_t, x0_hat, t, t_next, sched, eta, noise, eps_hat=None):
    """One reverse jump from step ``t`` to ``t_next < t``.

    By default the noise direction is re-derived from ``(x_t, x0_hat)``, so
    with ``eta = 1`` and ``t_next = t - 1`` this is exactly the DDPM posterior
    ``q(x_{t-1} | x_t, x0)``; with ``eta = 0`` it is the deterministic DDIM
    update. Passing ``eps_hat`` uses that direction instead (the denoiser's
    own noise prediction, as in range-null-space samplers).
    """
    if not t_next < t:
        raise ValueError(f"t_next ({t_next}) must be < t ({t})")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    _same_shape(x_t, x0_hat, "reverse_step")
    ab_t = sched.alpha_bar(t)
    ab_n = sched.alpha_bar(t_next)
    if eps_hat is None:
        eps_hat = (x_t - np.sqrt(ab_t) * x0_hat) / max(np.sqrt(1.0 - ab_t), EPS_FLOOR)
    else:
        _same_shape(x_t, eps_hat, "reverse_step eps_hat")
    sigma = ddim_sigma(t, t_next, sched, eta)
    dir_coef = np.sqrt(max(1.0 - ab_n - sigma * sigma, 0.0))
    out = np.sqrt(ab_n) * x0_hat + dir_coef * eps_hat
    if sigma > 0.0:
        _same_shape(x_t, noise, "reverse_step noise")
        out = out + sigma * noise
    return out


def posterior_mean_coefficients(t, sched):
    """Coefficients ``(c_x0, c_xt, var)`` of ``q(x_{t-1} | x_t, x0)`` for adjacent steps."""
    _check_step(t, sched)
    ab_t = sched.alpha_bar(t)
    ab_p = sched.alpha_bar(t - 1)
    beta = sched.beta(t)
    alpha = 1.0 - beta
    c_x0 = np.sqrt(ab_p) * beta / (1.0 - ab_t)
    c_xt = np.sqrt(alpha) * (1.0 - ab_p) / (1.0 - ab_t)
    var = (1.0 - ab_p) / (1.0 - ab_t) * beta
    return c_x0, c_xt, var
