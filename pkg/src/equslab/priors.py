"""Exact-score diffusion priors.

A :class:`GaussianMixturePrior` with isotropic components stays a Gaussian
mixture under the forward noising process, so its score, noise prediction
and posterior mean ``E[x0 | x_t]`` are all available in closed form.
"""

from typing import Protocol

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .diffusion import NoiseSchedule, estimate_x0, score_eps_convert
from .transforms import TransformGroup


class PriorInterface(Protocol):
    """Anything that predicts the noise in ``x_t`` at step ``t``."""

    def eps(self, x_t: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray: ...


class GaussianMixturePrior:
    """``p(x0) = sum_k w_k N(mu_k, s_k^2 I)`` over images of shape ``means.shape[1:]``."""

    def __init__(self, weights, means, variances):
        weights = np.asarray(weights, dtype=np.float64).ravel()
        means = np.asarray(means, dtype=np.float64)
        variances = np.asarray(variances, dtype=np.float64).ravel()
        if means.ndim == 3:
            means = means[:, :, :, None]
        if means.ndim != 4:
            raise ValueError("means must have shape (K, H, W, C)")
        K = means.shape[0]
        if weights.size != K or variances.size != K:
            raise ValueError("weights, means and variances disagree on K")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(variances <= 0):
            raise ValueError("variances must be positive")
        self.weights = weights
        self.means = means
        self.variances = variances
        self._flat_means = np.ascontiguousarray(means.reshape(K, -1))
        self._log_w = np.log(weights)

    @property
    def K(self) -> int:
        return self.weights.size

    @property
    def shape(self):
        return self.means.shape[1:]

    def __repr__(self):
        return f"GaussianMixturePrior(K={self.K}, shape={self.shape})"

    def marginal_params(self, t, sched):
        """``(sqrt(abar_t), per-component variance of x_t)``."""
        ab = sched.alpha_bar(t)
        return np.sqrt(ab), ab * self.variances + (1.0 - ab)

    def _check(self, x_t):
        x_t = np.asarray(x_t, dtype=np.float64)
        if x_t.shape != self.shape:
            raise ValueError(f"expected image of shape {self.shape}, got {x_t.shape}")
        return x_t

    def responsibilities(self, x_t, t, sched):
        x_t = self._check(x_t)
        sab, var_t = self.marginal_params(t, sched)
        resp, _ = _kernels.mixture_score(x_t.ravel(), self._flat_means, sab, var_t, self._log_w)
        return resp

    def log_density(self, x_t, t, sched):
        x_t = self._check(x_t)
        sab, var_t = self.marginal_params(t, sched)
        d2 = ((x_t.ravel()[None, :] - sab * self._flat_means) ** 2).sum(axis=1)
        n = x_t.size
        return float(logsumexp(self._log_w - 0.5 * d2 / var_t - 0.5 * n * np.log(2 * np.pi * var_t)))

    def score(self, x_t, t, sched):
        """Exact ``grad log p_t(x_t)``."""
        x_t = self._check(x_t)
        sab, var_t = self.marginal_params(t, sched)
        _, s = _kernels.mixture_score(x_t.ravel(), self._flat_means, sab, var_t, self._log_w)
        return s.reshape(self.shape)

    def eps(self, x_t, t, sched):
        return score_eps_convert(self.score(x_t, t, sched), t, sched, "score->eps")

    def posterior_mean(self, x_t, t, sched):
        """Closed-form ``E[x0 | x_t]`` by Gaussian conjugacy, component by component.

        Deliberately independent of :meth:`score` (scipy log-sum-exp, no kernel).
        """
        x_t = self._check(x_t)
        ab = sched.alpha_bar(t)
        sab = np.sqrt(ab)
        var_t = ab * self.variances + (1.0 - ab)
        flat = x_t.ravel()
        d2 = ((flat[None, :] - sab * self._flat_means) ** 2).sum(axis=1)
        logp = self._log_w - 0.5 * d2 / var_t - 0.5 * flat.size * np.log(2 * np.pi * var_t)
        r = np.exp(logp - logsumexp(logp))
        gain = (sab * self.variances / var_t)[:, None]
        comp_means = self._flat_means + gain * (flat[None, :] - sab * self._flat_means)
        return (r @ comp_means).reshape(self.shape)

    def sample(self, rng, size=None):
        """Draw ``x0`` from the mixture."""
        if size is None:
            k = rng.choice(self.K, p=self.weights)
            return self.means[k] + np.sqrt(self.variances[k]) * rng.standard_normal(self.shape)
        return np.stack([self.sample(rng) for _ in range(size)])


class EpsErrorDenoiser:
    """Exact mixture noise prediction plus a fixed error field in noise space.

    Mimics a trained noise-prediction network: the error is ``scale * b`` for
    one fixed random image ``b``, so its effect on ``x_{0|t}`` grows like
    ``sqrt(1 - abar_t) / sqrt(abar_t)`` and it is not equivariant under grid
    transforms.
    """

    def __init__(self, prior, scale, seed=0):
        self.prior = prior
        self.scale = float(scale)
        self.seed = int(seed)
        self.field = self.scale * np.random.default_rng(seed).standard_normal(prior.shape)

    @property
    def shape(self):
        return self.prior.shape

    def eps(self, x_t, t, sched):
        return self.prior.eps(x_t, t, sched) + self.field

    def __repr__(self):
        return f"EpsErrorDenoiser({self.prior!r}, scale={self.scale}, seed={self.seed})"


def score(prior, x_t, t, sched):
    return prior.score(x_t, t, sched)


def eps_predict(prior, x_t, t, sched):
    return prior.eps(x_t, t, sched)


def posterior_mean_oracle(prior, x_t, t, sched):
    return prior.posterior_mean(x_t, t, sched)


def denoise(prior: PriorInterface, x_t, t, sched):
    """Posterior-mean estimate ``x_{0|t}`` from the prior's noise prediction."""
    return estimate_x0(x_t, prior.eps(x_t, t, sched), t, sched)


def _orbit(mean, group):
    orbit = [mean]
    frontier = [mean]
    while frontier:
        nxt = []
        for m in frontier:
            for f in group:
                cand = f.apply(m)
                if not any(np.array_equal(cand, o) for o in orbit):
                    orbit.append(cand)
                    nxt.append(cand)
        frontier = nxt
    return orbit


def symmetrize(prior: GaussianMixturePrior, group: TransformGroup) -> GaussianMixturePrior:
    """Smallest mixture containing every group image of every component.

    Each component's weight is spread evenly over its orbit; coincident
    components are merged, so an already-invariant prior maps to itself.
    """
    means, variances, weights = [], [], []
    for k in range(prior.K):
        orbit = _orbit(prior.means[k], group)
        for m in orbit:
            w = prior.weights[k] / len(orbit)
            for j in range(len(means)):
                if variances[j] == prior.variances[k] and np.array_equal(means[j], m):
                    weights[j] += w
                    break
            else:
                means.append(m)
                variances.append(prior.variances[k])
                weights.append(w)
    weights = np.asarray(weights)
    return GaussianMixturePrior(weights / weights.sum(), np.stack(means), variances)


def smooth_pattern(shape, rng, cutoff=3.0, low=0.15, high=0.85):
    """Random low-frequency image rescaled to ``[low, high]``."""
    H, W, C = shape
    noise = rng.standard_normal(shape)
    fr = np.fft.fftfreq(H)[:, None]
    fc = np.fft.fftfreq(W)[None, :]
    response = np.exp(-(fr**2 + fc**2) * (max(H, W) / cutoff) ** 2)
    img = np.real(np.fft.ifft2(np.fft.fft2(noise, axes=(0, 1)) * response[:, :, None], axes=(0, 1)))
    img -= img.min()
    img /= max(img.max(), 1e-12)
    return low + (high - low) * img


def toy_mixture(shape, components, variance, seed=0):
    """Equal-weight mixture of smooth random patterns with a shared variance."""
    rng = np.random.default_rng(seed)
    means = np.stack([smooth_pattern(shape, rng) for _ in range(components)])
    return GaussianMixturePrior(np.full(components, 1.0 / components), means, np.full(components, variance))
