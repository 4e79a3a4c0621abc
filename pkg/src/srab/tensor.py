"""Planar image tensors and differentiable primitives.

Images are plain ``numpy.ndarray`` objects in channel-major ``(C, H, W)``
order, or stacks of them shaped ``(N, C, H, W)``.  Every primitive here
accepts both layouts and returns the same layout it was given.  All
arithmetic is float64.

Each forward primitive has an ``*_input_grad`` partner computing the
vector-Jacobian product with respect to the primitive's input, so SR models
built from these pieces can be differentiated without a general autodiff
engine.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ConvKernel",
    "as_image",
    "clip_image",
    "conv2d_forward",
    "conv2d_input_grad",
    "conv2d_weight_grad",
    "relu_forward",
    "relu_input_grad",
    "pixel_shuffle",
    "pixel_shuffle_grad",
    "keys_kernel",
    "resize_matrix",
    "bicubic_resize",
    "bicubic_resize_grad",
    "finite_diff_gradient",
]

KEYS_A = -0.5


@dataclass
class ConvKernel:
    """Weights ``(out, in, kh, kw)`` and per-output-channel bias of a 2-D convolution."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 4:
            raise ConfigurationError(f"kernel weights must be 4-D, got shape {self.weights.shape}")
        out_ch, _, kh, kw = self.weights.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ConfigurationError(f"kernel dims must be odd, got {kh}x{kw}")
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.bias.shape != (out_ch,):
            raise ConfigurationError(f"bias length {self.bias.size} != out_channels {out_ch}")

    @property
    def out_channels(self):
        return self.weights.shape[0]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    @property
    def kernel_height(self):
        return self.weights.shape[2]

    @property
    def kernel_width(self):
        return self.weights.shape[3]

    @classmethod
    def zeros(cls, out_channels, in_channels, size=3):
        return cls(np.zeros((out_channels, in_channels, size, size)), np.zeros(out_channels))


def as_image(x):
    """Return ``x`` as a float64 array of rank 3 or 4."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (3, 4):
        raise ConfigurationError(f"expected (C,H,W) or (N,C,H,W), got shape {x.shape}")
    return x


def clip_image(x):
    return np.clip(x, 0.0, 1.0)


def _batched(x):
    """Add a leading batch axis to a single image; return (array, was_single)."""
    x = as_image(x)
    if x.ndim == 3:
        return x[None], True
    return x, False


def _unbatch(y, single):
    return y[0] if single else y


def _im2col(xt, kh, kw):
    # xt: (C, N, H, W) -> cols (C*kh*kw, N*H*W) with zero "same" padding
    c, n, h, w = xt.shape
    ph, pw = kh // 2, kw // 2
    xp = np.zeros((c, n, h + 2 * ph, w + 2 * pw))
    xp[:, :, ph:ph + h, pw:pw + w] = xt
    cols = np.empty((c, kh, kw, n, h, w))
    for dy in range(kh):
        for dx in range(kw):
            cols[:, dy, dx] = xp[:, :, dy:dy + h, dx:dx + w]
    return cols.reshape(c * kh * kw, n * h * w)


def _shift_sum(z, kh, kw):
    # z: (O, kh, kw, N, H, W) per-tap partial outputs -> (O, N, H, W)
    o, _, _, n, h, w = z.shape
    ph, pw = kh // 2, kw // 2
    out = np.zeros((o, n, h + 2 * ph, w + 2 * pw))
    # tap (dy, dx) reads input at (y + dy - ph, x + dx - pw)
    for dy in range(kh):
        for dx in range(kw):
            out[:, :, 2 * ph - dy:2 * ph - dy + h, 2 * pw - dx:2 * pw - dx + w] += z[:, dy, dx]
    return out[:, :, ph:ph + h, pw:pw + w]


def _conv(x, weights, bias=None):
    n, c, h, w = x.shape
    out_ch, in_ch, kh, kw = weights.shape
    if c != in_ch:
        raise ConfigurationError(f"input has {c} channels, kernel expects {in_ch}")
    xt = x.transpose(1, 0, 2, 3)
    if kh == 1 and kw == 1:
        y = (weights.reshape(out_ch, in_ch) @ xt.reshape(c, n * h * w)).reshape(out_ch, n, h, w)
    elif out_ch < in_ch:
        # few outputs: multiply first, then shift-add the per-tap planes
        wt = weights.transpose(0, 2, 3, 1).reshape(out_ch * kh * kw, in_ch)
        z = (wt @ xt.reshape(c, n * h * w)).reshape(out_ch, kh, kw, n, h, w)
        y = _shift_sum(z, kh, kw)
    else:
        y = (weights.reshape(out_ch, -1) @ _im2col(xt, kh, kw)).reshape(out_ch, n, h, w)
    if bias is not None:
        y = y + bias[:, None, None, None]
    return y.transpose(1, 0, 2, 3)


def conv2d_forward(x, kernel):
    """Stride-1 cross-correlation with zero "same" padding, plus bias.

    :param x: image ``(C, H, W)`` or stack ``(N, C, H, W)``
    :param kernel: :class:`ConvKernel` with ``in_channels == C``
    :return: array with ``kernel.out_channels`` channels and the input's spatial size
    """
    x, single = _batched(x)
    return _unbatch(_conv(x, kernel.weights, kernel.bias), single)


def conv2d_input_grad(upstream, kernel):
    """Vector-Jacobian product of :func:`conv2d_forward` with respect to its input.

    Same-padded correlation of ``upstream`` with the spatially flipped,
    channel-transposed kernel.  The bias plays no part.
    """
    g, single = _batched(upstream)
    if g.shape[1] != kernel.out_channels:
        raise ConfigurationError(
            f"upstream has {g.shape[1]} channels, kernel produces {kernel.out_channels}"
        )
    flipped = kernel.weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    return _unbatch(_conv(g, np.ascontiguousarray(flipped)), single)


def conv2d_weight_grad(x, upstream, kernel):
    """Gradients of ``<upstream, conv2d_forward(x)>`` with respect to weights and bias."""
    x, _ = _batched(x)
    g, _ = _batched(upstream)
    out_ch, in_ch, kh, kw = kernel.weights.shape
    n, _, h, w = g.shape
    gt = g.transpose(1, 0, 2, 3)
    xt = x.transpose(1, 0, 2, 3)
    db = gt.sum(axis=(1, 2, 3))
    if kh == 1 and kw == 1:
        dw = gt.reshape(out_ch, -1) @ xt.reshape(in_ch, -1).T
        return dw.reshape(kernel.weights.shape), db
    if out_ch < in_ch:
        # shift the smaller operand: g at offset (k - d) pairs with x at p
        gcols = _im2col(gt, kh, kw)
        dw = (gcols @ xt.reshape(in_ch, -1).T).reshape(out_ch, kh, kw, in_ch)
        return np.ascontiguousarray(dw[:, ::-1, ::-1].transpose(0, 3, 1, 2)), db
    dw = gt.reshape(out_ch, -1) @ _im2col(xt, kh, kw).T
    return dw.reshape(kernel.weights.shape), db


def relu_forward(x):
    return np.maximum(x, 0.0)


def relu_input_grad(upstream, saved_input):
    # subgradient at exactly 0 is taken as 0
    return np.where(np.asarray(saved_input) > 0.0, upstream, 0.0)


def pixel_shuffle(x, r):
    """Rearrange ``(C*r*r, H, W)`` into ``(C, r*H, r*W)``.

    ``out[c, r*y + a, r*x + b] = in[c*r*r + a*r + b, y, x]``.
    """
    x, single = _batched(x)
    n, c, h, w = x.shape
    if c % (r * r):
        raise ConfigurationError(f"{c} channels not divisible by r^2 = {r * r}")
    out = x.reshape(n, c // (r * r), r, r, h, w).transpose(0, 1, 4, 2, 5, 3)
    return _unbatch(out.reshape(n, c // (r * r), h * r, w * r), single)


def pixel_shuffle_grad(upstream, r):
    """Inverse permutation of :func:`pixel_shuffle` (its exact adjoint)."""
    g, single = _batched(upstream)
    n, c, hr, wr = g.shape
    if hr % r or wr % r:
        raise ConfigurationError(f"spatial size {hr}x{wr} not divisible by r = {r}")
    h, w = hr // r, wr // r
    out = g.reshape(n, c, h, r, w, r).transpose(0, 1, 3, 5, 2, 4)
    return _unbatch(out.reshape(n, c * r * r, h, w), single)


def keys_kernel(t, a=KEYS_A):
    """Keys cubic-convolution kernel, vectorised over ``t``."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    near = ((a + 2) * t - (a + 3)) * t * t + 1
    far = ((a * t - 5 * a) * t + 8 * a) * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


@lru_cache(maxsize=256)
def _resize_matrix(n_in, n_out, antialias):
    scale = n_in / n_out
    mat = np.zeros((n_out, n_in))
    # widen the kernel when shrinking so it acts as a low-pass prefilter
    stretch = scale if (antialias and scale > 1) else 1.0
    support = 2.0 * stretch
    for i in range(n_out):
        src = (i + 0.5) * scale - 0.5
        lo = math.floor(src - support) + 1
        hi = math.ceil(src + support) - 1
        taps = np.arange(lo, hi + 1)
        wts = keys_kernel((src - taps) / stretch) / stretch
        if stretch != 1.0:
            wts = wts / wts.sum()
        np.add.at(mat[i], np.clip(taps, 0, n_in - 1), wts)
    mat.setflags(write=False)
    return mat


def resize_matrix(n_in, n_out, antialias=False):
    """Dense ``(n_out, n_in)`` matrix of the 1-D Keys resampler with edge clamping.

    Source coordinate of output sample ``i`` is ``(i + 0.5) * n_in / n_out - 0.5``.
    With ``antialias=True`` and ``n_out < n_in`` the kernel is stretched by the
    shrink factor and renormalised (the usual imresize behaviour for downscaling).
    """
    if n_in < 1 or n_out < 1:
        raise ConfigurationError(f"resize dims must be >= 1, got {n_in} -> {n_out}")
    return _resize_matrix(int(n_in), int(n_out), bool(antialias))


def bicubic_resize(x, out_height, out_width, antialias=False):
    """Separable Keys (a = -0.5) bicubic resize; output is not clipped, so the map stays linear."""
    x = as_image(x)
    rh = resize_matrix(x.shape[-2], out_height, antialias)
    rw = resize_matrix(x.shape[-1], out_width, antialias)
    return rh @ x @ rw.T


def bicubic_resize_grad(upstream, in_dims, out_dims=None, antialias=False):
    """Transpose of :func:`bicubic_resize` applied to ``upstream``.

    :param in_dims: ``(H_in, W_in)`` of the forward input
    :param out_dims: ``(H_out, W_out)``; defaults to the upstream's spatial size
    """
    g = as_image(upstream)
    if out_dims is None:
        out_dims = g.shape[-2:]
    if tuple(g.shape[-2:]) != tuple(out_dims):
        raise ConfigurationError(f"upstream spatial size {g.shape[-2:]} != {tuple(out_dims)}")
    rh = resize_matrix(in_dims[0], out_dims[0], antialias)
    rw = resize_matrix(in_dims[1], out_dims[1], antialias)
    return rh.T @ g @ rw


def finite_diff_gradient(scalar_fn, x, step=1e-4):
    """Central-difference gradient of ``scalar_fn`` at ``x``, one element at a time."""
    if step <= 0:
        raise ConfigurationError("finite-difference step must be positive")
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = scalar_fn(x)
        flat[i] = orig - step
        down = scalar_fn(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad
