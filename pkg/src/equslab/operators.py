"""Linear degradation operators with exact adjoints and closed-form pseudo-inverses.

Signals are ``(H, W, C)`` images; measurements are flat 1-D vectors of
length ``m``. Every operator here satisfies ``m <= n`` and ships its
Moore-Penrose pseudo-inverse in closed form.
"""

import math

import numpy as np

from .transforms import Transform

TASKS = ("inpaint", "sr", "cs", "gaussian-deblur", "colorize")
#: Measurement noise levels used in the noisy-restoration experiments.
NOISE_LEVELS = (0.0, 0.01, 0.05, 0.10)


class LinearOperator:
    """Base class: ``y = A x`` on images of shape ``in_shape``."""

    kind = "abstract"

    def __init__(self, in_shape, m):
        self.in_shape = tuple(int(v) for v in in_shape)
        if len(self.in_shape) != 3:
            raise ValueError(f"in_shape must be (H, W, C), got {in_shape}")
        self.n = int(np.prod(self.in_shape))
        self.m = int(m)
        if not 0 < self.m <= self.n:
            raise ValueError(f"need 0 < m <= n, got m={self.m}, n={self.n}")

    def _check_x(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.in_shape:
            if x.size == self.n:
                return x.reshape(self.in_shape)
            raise ValueError(f"{self.kind}: expected image of shape {self.in_shape}, got {x.shape}")
        return x

    def _check_y(self, y):
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.size != self.m:
            raise ValueError(f"{self.kind}: expected {self.m} measurements, got {y.size}")
        return y

    def apply(self, x):
        return self._apply(self._check_x(x))

    def adjoint(self, y):
        return self._adjoint(self._check_y(y))

    def pinv(self, y):
        return self._pinv(self._check_y(y))

    def __call__(self, x):
        return self.apply(x)

    def __repr__(self):
        return f"{type(self).__name__}(in_shape={self.in_shape}, m={self.m})"


class Mask(LinearOperator):
    """Selects the entries where ``mask`` is true (inpainting)."""

    kind = "mask"

    def __init__(self, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim == 2:
            mask = mask[:, :, None]
        super().__init__(mask.shape, int(mask.sum()))
        self.mask = mask
        self.idx = np.flatnonzero(mask.ravel())

    def _apply(self, x):
        return x.ravel()[self.idx]

    def _adjoint(self, y):
        out = np.zeros(self.n)
        out[self.idx] = y
        return out.reshape(self.in_shape)

    def _pinv(self, y):
        return self._adjoint(y)


class AvgPoolSR(LinearOperator):
    """Average over non-overlapping ``s x s`` blocks in each channel."""

    kind = "avgpool_sr"

    def __init__(self, in_shape, factor):
        H, W, C = in_shape
        s = int(factor)
        if s < 1 or H % s or W % s:
            raise ValueError(f"pool factor {factor} must divide the grid {H}x{W}")
        super().__init__(in_shape, (H // s) * (W // s) * C)
        self.factor = s
        self.out_shape = (H // s, W // s, C)

    def _apply(self, x):
        H, W, C = self.in_shape
        s = self.factor
        return x.reshape(H // s, s, W // s, s, C).mean(axis=(1, 3)).ravel()

    def _replicate(self, y):
        s = self.factor
        return np.repeat(np.repeat(y.reshape(self.out_shape), s, axis=0), s, axis=1)

    def _adjoint(self, y):
        return self._replicate(y) / self.factor**2

    def _pinv(self, y):
        return self._replicate(y)


def gaussian_kernel(grid, sigma, radius=None):
    """Periodic Gaussian point-spread function centred on pixel (0, 0).

    ``radius=None`` gives the full circulant kernel; otherwise the support is
    truncated to a ``(2r+1) x (2r+1)`` neighbourhood. Normalized to unit sum.
    """
    H, W = grid
    dr = np.minimum(np.arange(H), H - np.arange(H))
    dc = np.minimum(np.arange(W), W - np.arange(W))
    d2 = dr[:, None] ** 2 + dc[None, :] ** 2
    k = np.exp(-d2 / (2.0 * sigma * sigma))
    if radius is not None:
        k = np.where((dr[:, None] <= radius) & (dc[None, :] <= radius), k, 0.0)
    return k / k.sum()


class CirculantBlur(LinearOperator):
    """Periodic convolution with ``kernel`` (same kernel on every channel).

    The pseudo-inverse divides in the Fourier domain and zeroes frequencies
    whose magnitude is below ``eps_pinv`` times the peak magnitude.
    """

    kind = "circulant_blur"

    def __init__(self, in_shape, kernel, eps_pinv=1e-3):
        super().__init__(in_shape, int(np.prod(in_shape)))
        kernel = np.asarray(kernel, dtype=np.float64)
        if kernel.shape != self.in_shape[:2]:
            raise ValueError(f"kernel shape {kernel.shape} != grid {self.in_shape[:2]}")
        self.kernel = kernel
        self.eps_pinv = float(eps_pinv)
        self.freq = np.fft.fft2(kernel)
        mag = np.abs(self.freq)
        keep = mag > self.eps_pinv * mag.max()
        self.inv_freq = np.where(keep, 1.0 / np.where(keep, self.freq, 1.0), 0.0)

    def _filter(self, x, response):
        X = np.fft.fft2(x, axes=(0, 1))
        return np.real(np.fft.ifft2(X * response[:, :, None], axes=(0, 1)))

    def _apply(self, x):
        return self._filter(x, self.freq).ravel()

    def _adjoint(self, y):
        return self._filter(y.reshape(self.in_shape), np.conj(self.freq))

    def _pinv(self, y):
        return self._filter(y.reshape(self.in_shape), self.inv_freq)


class BlockCS(LinearOperator):
    """Block compressed sensing: one orthonormal-row matrix per ``b x b`` block and channel."""

    kind = "block_cs"

    def __init__(self, in_shape, ratio=0.25, block=8, seed=0):
        H, W, C = in_shape
        b = int(block)
        if H % b or W % b:
            raise ValueError(f"block size {b} must divide the grid {H}x{W}")
        q = int(math.ceil(ratio * b * b))
        if not 0 < q <= b * b:
            raise ValueError(f"compression ratio {ratio} out of range")
        super().__init__(in_shape, (H // b) * (W // b) * C * q)
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(rng.standard_normal((b * b, q)))
        self.phi = np.ascontiguousarray(Q.T)
        self.ratio = float(ratio)
        self.block = b
        self.rows = q

    def _blocks(self, x):
        H, W, C = self.in_shape
        b = self.block
        return x.reshape(H // b, b, W // b, b, C).transpose(0, 2, 4, 1, 3).reshape(H // b, W // b, C, b * b)

    def _unblocks(self, v):
        H, W, C = self.in_shape
        b = self.block
        return v.reshape(H // b, W // b, C, b, b).transpose(0, 3, 1, 4, 2).reshape(H, W, C)

    def _apply(self, x):
        return (self._blocks(x) @ self.phi.T).ravel()

    def _adjoint(self, y):
        H, W, C = self.in_shape
        b = self.block
        return self._unblocks(y.reshape(H // b, W // b, C, self.rows) @ self.phi)

    def _pinv(self, y):
        return self._adjoint(y)


class GrayMean(LinearOperator):
    """Per-pixel mean over the colour channels (colorization)."""

    kind = "gray_mean"

    def __init__(self, in_shape):
        H, W, C = in_shape
        super().__init__(in_shape, H * W)
        self.channels = C

    def _apply(self, x):
        return x.mean(axis=2).ravel()

    def _adjoint(self, y):
        H, W, C = self.in_shape
        return np.repeat(y.reshape(H, W, 1) / C, C, axis=2)

    def _pinv(self, y):
        H, W, C = self.in_shape
        return np.repeat(y.reshape(H, W, 1), C, axis=2)


class TransformComposed(LinearOperator):
    """``A_f = A o T_f^{-1}`` for a unitary grid transform ``f``."""

    kind = "transform_composed"

    def __init__(self, inner: LinearOperator, transform: Transform):
        super().__init__(inner.in_shape, inner.m)
        self.inner = inner
        self.transform = transform

    def _apply(self, x):
        return self.inner.apply(self.transform.inverse(x))

    def _adjoint(self, y):
        return self.transform.apply(self.inner.adjoint(y))

    def _pinv(self, y):
        return self.transform.apply(self.inner.pinv(y))


def apply(A: LinearOperator, x):
    return A.apply(x)


def apply_adjoint(A: LinearOperator, y):
    return A.adjoint(y)


def apply_pinv(A: LinearOperator, y):
    return A.pinv(y)


def compose_with_transform(A: LinearOperator, f: Transform) -> LinearOperator:
    return TransformComposed(A, f)


def random_mask(shape, keep=0.5, hole=None, seed=0):
    """Pixel mask with a fraction ``keep`` observed, plus an optional unobserved rectangle.

    ``hole`` is ``(row, col, height, width)``. The mask is shared by all channels.
    """
    H, W, C = shape
    rng = np.random.default_rng(seed)
    n_keep = int(round(keep * H * W))
    flat = np.zeros(H * W, dtype=bool)
    flat[rng.permutation(H * W)[:n_keep]] = True
    mask = flat.reshape(H, W)
    if hole is not None:
        r, c, h, w = (int(v) for v in hole)
        mask[r:r + h, c:c + w] = False
    if not mask.any():
        raise ValueError("mask observes no pixels")
    return np.repeat(mask[:, :, None], C, axis=2)


def build_task(name, shape, params=None, seed=0):
    """Construct the degradation operator and noise level for a named task.

    Returns ``(operator, sigma_y)``. Construction is deterministic in ``seed``.
    """
    params = dict(params or {})
    sigma_y = float(params.pop("sigma_y", 0.0))
    if sigma_y < 0:
        raise ValueError("sigma_y must be >= 0")
    shape = tuple(int(v) for v in shape)
    if name == "inpaint":
        op = Mask(random_mask(shape, keep=params.pop("keep", 0.5), hole=params.pop("hole", None), seed=seed))
    elif name == "sr":
        op = AvgPoolSR(shape, params.pop("factor", 4))
    elif name == "cs":
        op = BlockCS(shape, ratio=params.pop("ratio", 0.25), block=params.pop("block", 8), seed=seed)
    elif name == "gaussian-deblur":
        kernel = gaussian_kernel(shape[:2], params.pop("sigma", 1.5), params.pop("radius", 2))
        op = CirculantBlur(shape, kernel, eps_pinv=params.pop("eps_pinv", 1e-3))
    elif name == "colorize":
        if shape[2] != 3:
            raise ValueError("colorize needs a 3-channel shape")
        op = GrayMean(shape)
    else:
        raise ValueError(f"unknown task {name!r}; expected one of {TASKS}")
    if params:
        raise ValueError(f"unused parameters for task {name!r}: {sorted(params)}")
    return op, sigma_y
