"""Hot numeric kernels.

Every kernel has a numba ``@njit`` version and a pure-numpy version with
identical semantics. The numba path is used when numba imports cleanly and
``EQUSLAB_DISABLE_NUMBA`` is unset (or ``0``). Both paths stay importable as
``*_numpy`` / ``*_numba`` so tests and the benchmark can compare them.
"""

import math
import os

import numpy as np

_DISABLE = os.environ.get("EQUSLAB_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLE


# ---------------------------------------------------------------------------
# Gaussian-mixture responsibilities and score
# ---------------------------------------------------------------------------


def mixture_score_numpy(x, means, sqrt_ab, var_t, log_w):
    """Responsibilities and score of an isotropic Gaussian mixture.

    Component ``k`` has density ``N(sqrt_ab * means[k], var_t[k] * I)``.

    Parameters
    ----------
    x : (n,) float64
    means : (K, n) float64
    sqrt_ab : float
    var_t : (K,) float64
    log_w : (K,) float64

    Returns
    -------
    resp : (K,) responsibilities, summing to one
    score : (n,) gradient of the log density at ``x``
    """
    n = x.shape[0]
    diff = x[None, :] - sqrt_ab * means
    d2 = np.einsum("kn,kn->k", diff, diff)
    logp = log_w - 0.5 * d2 / var_t - 0.5 * n * np.log(2.0 * np.pi * var_t)
    logp = logp - logp.max()
    resp = np.exp(logp)
    resp /= resp.sum()
    score = -((resp / var_t) @ diff)
    return resp, score


def _mixture_score_loops(x, means, sqrt_ab, var_t, log_w):
    K, n = means.shape
    logp = np.empty(K)
    for k in range(K):
        d2 = 0.0
        for i in range(n):
            d = x[i] - sqrt_ab * means[k, i]
            d2 += d * d
        logp[k] = log_w[k] - 0.5 * d2 / var_t[k] - 0.5 * n * math.log(2.0 * math.pi * var_t[k])
    top = logp.max()
    resp = np.empty(K)
    total = 0.0
    for k in range(K):
        resp[k] = math.exp(logp[k] - top)
        total += resp[k]
    for k in range(K):
        resp[k] /= total
    score = np.zeros(n)
    for k in range(K):
        c = resp[k] / var_t[k]
        for i in range(n):
            score[i] -= c * (x[i] - sqrt_ab * means[k, i])
    return resp, score


# ---------------------------------------------------------------------------
# Sliding-window means (SSIM statistics)
# ---------------------------------------------------------------------------


def window_means_numpy(img, win):
    """Mean over every ``win x win`` window of a 2-D array ("valid" placement)."""
    ii = np.zeros((img.shape[0] + 1, img.shape[1] + 1))
    ii[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)
    s = ii[win:, win:] - ii[:-win, win:] - ii[win:, :-win] + ii[:-win, :-win]
    return s / (win * win)


def _window_means_loops(img, win):
    # separable sliding sums: along columns first, then down rows
    H, W = img.shape
    oh = H - win + 1
    ow = W - win + 1
    rows = np.empty((H, ow))
    for r in range(H):
        acc = 0.0
        for c in range(win):
            acc += img[r, c]
        rows[r, 0] = acc
        for c in range(1, ow):
            acc += img[r, c + win - 1] - img[r, c - 1]
            rows[r, c] = acc
    out = np.empty((oh, ow))
    scale = 1.0 / (win * win)
    for c in range(ow):
        acc = 0.0
        for r in range(win):
            acc += rows[r, c]
        out[0, c] = acc * scale
        for r in range(1, oh):
            acc += rows[r + win - 1, c] - rows[r - 1, c]
            out[r, c] = acc * scale
    return out


if HAS_NUMBA:
    mixture_score_numba = njit(cache=True)(_mixture_score_loops)
    window_means_numba = njit(cache=True)(_window_means_loops)
else:  # pragma: no cover
    mixture_score_numba = None
    window_means_numba = None


def mixture_score(x, means, sqrt_ab, var_t, log_w):
    if USE_NUMBA:
        return mixture_score_numba(x, means, float(sqrt_ab), var_t, log_w)
    return mixture_score_numpy(x, means, sqrt_ab, var_t, log_w)


def window_means(img, win):
    if USE_NUMBA:
        return window_means_numba(np.ascontiguousarray(img, dtype=np.float64), int(win))
    return window_means_numpy(img, win)


def backend():
    """Name of the active kernel backend."""
    return "numba" if USE_NUMBA else "numpy"
