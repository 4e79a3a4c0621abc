"""Differentiable super-resolution operators.

Two kinds of model ship with the toolkit: a bicubic upscaler and a small
EDSR-style residual CNN (head conv, residual blocks with scaled skips, a
global skip, sub-pixel upsampling, tail conv).  Both expose ``forward`` and
``input_gradient`` (a vector-Jacobian product), which is all the attacks
need.  Layers also report weight gradients so the trainer can fit them.
"""

from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as T
from .errors import ConfigurationError

__all__ = [
    "Conv2d",
    "ReLU",
    "PixelShuffle",
    "Residual",
    "BicubicUpsample",
    "SRModel",
    "MicroEdsrConfig",
    "PRESETS",
    "build_bicubic_model",
    "build_micro_edsr",
    "build_preset",
    "model_forward",
    "model_input_gradient",
]


class Conv2d:
    def __init__(self, kernel):
        self.kernel = kernel

    def forward(self, x):
        return T.conv2d_forward(x, self.kernel), x

    def backward(self, cache, g, grads=None):
        if grads is not None:
            grads[id(self.kernel)] = T.conv2d_weight_grad(cache, g, self.kernel)
        return T.conv2d_input_grad(g, self.kernel)

    def kernels(self):
        return [self.kernel]

    def describe(self):
        k = self.kernel
        return f"conv{k.kernel_height}x{k.kernel_width}({k.in_channels}->{k.out_channels})"


class ReLU:
    def forward(self, x):
        return T.relu_forward(x), x

    def backward(self, cache, g, grads=None):
        return T.relu_input_grad(g, cache)

    def kernels(self):
        return []

    def describe(self):
        return "relu"


class PixelShuffle:
    def __init__(self, factor):
        self.factor = int(factor)

    def forward(self, x):
        return T.pixel_shuffle(x, self.factor), None

    def backward(self, cache, g, grads=None):
        return T.pixel_shuffle_grad(g, self.factor)

    def kernels(self):
        return []

    def describe(self):
        return f"pixel_shuffle(x{self.factor})"


class Residual:
    """``y = x + scaling * body(x)``."""

    def __init__(self, layers, scaling=1.0):
        self.layers = list(layers)
        self.scaling = float(scaling)

    def forward(self, x):
        caches = []
        h = x
        for layer in self.layers:
            h, c = layer.forward(h)
            caches.append(c)
        return x + self.scaling * h, caches

    def backward(self, caches, g, grads=None):
        h = self.scaling * g
        for layer, c in zip(reversed(self.layers), reversed(caches)):
            h = layer.backward(c, h, grads)
        return g + h

    def kernels(self):
        return [k for layer in self.layers for k in layer.kernels()]

    def describe(self):
        inner = ", ".join(layer.describe() for layer in self.layers)
        return f"residual[{inner}]*{self.scaling:g}"


class BicubicUpsample:
    def __init__(self, factor):
        self.factor = int(factor)

    def forward(self, x):
        h, w = x.shape[-2:]
        return T.bicubic_resize(x, self.factor * h, self.factor * w), (h, w)

    def backward(self, cache, g, grads=None):
        return T.bicubic_resize_grad(g, cache)

    def kernels(self):
        return []

    def describe(self):
        return f"bicubic(x{self.factor})"


@dataclass(frozen=True)
class MicroEdsrConfig:
    channels: int = 16
    blocks: int = 4
    residual_scaling: float = 0.1
    scale: int = 4

    def __post_init__(self):
        if self.channels < 1:
            raise ConfigurationError("channels must be >= 1")
        if self.blocks < 0:
            raise ConfigurationError("blocks must be >= 0")
        if self.scale not in (2, 4):
            raise ConfigurationError(f"scale must be 2 or 4, got {self.scale}")


PRESETS = {
    "micro": MicroEdsrConfig(channels=16, blocks=4),
    "micro-large": MicroEdsrConfig(channels=32, blocks=8),
}


class SRModel:
    """A stack of differentiable layers mapping ``(C, H, W)`` to ``(C, s*H, s*W)``.

    ``kind`` is ``"bicubic"`` or ``"micro_edsr"``; ``config`` holds the
    :class:`MicroEdsrConfig` for the latter.  Treat instances as immutable
    once built; only the trainer touches kernel arrays in place.
    """

    def __init__(self, name, kind, scale, layers, config=None, in_channels=3):
        self.name = name
        self.kind = kind
        self.scale = int(scale)
        self.layers = list(layers)
        self.config = config
        self.in_channels = in_channels
        self.history = ()
        factor = 1
        for layer in self._flat_layers():
            if isinstance(layer, (PixelShuffle, BicubicUpsample)):
                factor *= layer.factor
        if factor != self.scale:
            raise ConfigurationError(f"layer upscale factors give x{factor}, model declares x{self.scale}")

    def _flat_layers(self):
        stack = list(self.layers)
        while stack:
            layer = stack.pop(0)
            if isinstance(layer, Residual):
                stack = list(layer.layers) + stack
            yield layer

    def kernels(self):
        """All convolution kernels in a fixed forward order."""
        return [k for layer in self.layers for k in layer.kernels()]

    def _check_input(self, x):
        x = T.as_image(x)
        c = x.shape[-3]
        if c != self.in_channels:
            raise ConfigurationError(f"model expects {self.in_channels} channels, got {c}")
        return x

    def forward_with_cache(self, x):
        x = self._check_input(x)
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        return x, caches

    def backward(self, caches, upstream, grads=None):
        g = upstream
        for layer, c in zip(reversed(self.layers), reversed(caches)):
            g = layer.backward(c, g, grads)
        return g

    def forward(self, x):
        return self.forward_with_cache(x)[0]

    def input_gradient(self, x, upstream):
        y, caches = self.forward_with_cache(x)
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != y.shape:
            raise ConfigurationError(f"upstream shape {upstream.shape} != output shape {y.shape}")
        return self.backward(caches, upstream)

    def config_dict(self):
        return asdict(self.config) if self.config is not None else {"scale": self.scale}

    def __repr__(self):
        return f"SRModel(name={self.name!r}, kind={self.kind!r}, scale={self.scale})"


def model_forward(model, x):
    return model.forward(x)


def model_input_gradient(model, x, upstream):
    """Vector-Jacobian product ``J_f(x)^T upstream`` at LR resolution."""
    return model.input_gradient(x, upstream)


def build_bicubic_model(scale=4, channels=3):
    if scale < 1:
        raise ConfigurationError("scale must be >= 1")
    return SRModel("bicubic", "bicubic", scale, [BicubicUpsample(scale)], in_channels=channels)


def _init_kernel(rng, out_ch, in_ch, size=3):
    bound = (in_ch * size * size) ** -0.5
    w = rng.uniform(-bound, bound, size=(out_ch, in_ch, size, size))
    b = rng.uniform(-bound, bound, size=out_ch)
    # weights live at float32 precision so weight files round-trip exactly
    return T.ConvKernel(w.astype(np.float32).astype(np.float64), b.astype(np.float32).astype(np.float64))


def build_micro_edsr(config=None, seed=0, name="micro", zero=False):
    """Build the micro residual SR network.

    Layout: head conv 3->F; global skip around ``blocks`` x [conv, relu, conv]
    residual blocks (scaled by ``residual_scaling``) followed by a conv; then
    per x2 stage a conv F->4F and a pixel shuffle; tail conv F->3.

    Weights are drawn uniform in ``[-k, k]``, ``k = fan_in ** -0.5``, from
    ``numpy.random.default_rng(seed)``.  ``zero=True`` gives all-zero weights.
    """
    config = config or MicroEdsrConfig()
    rng = np.random.default_rng(seed)
    f = config.channels

    def conv(out_ch, in_ch):
        if zero:
            return Conv2d(T.ConvKernel.zeros(out_ch, in_ch))
        return Conv2d(_init_kernel(rng, out_ch, in_ch))

    layers = [conv(f, 3)]
    body = []
    for _ in range(config.blocks):
        body.append(Residual([conv(f, f), ReLU(), conv(f, f)], config.residual_scaling))
    body.append(conv(f, f))
    layers.append(Residual(body, 1.0))
    for _ in range({2: 1, 4: 2}[config.scale]):
        layers.append(conv(4 * f, f))
        layers.append(PixelShuffle(2))
    layers.append(conv(3, f))
    return SRModel(name, "micro_edsr", config.scale, layers, config=config)


def build_preset(preset, seed=0):
    if preset == "bicubic":
        return build_bicubic_model(4)
    try:
        config = PRESETS[preset]
    except KeyError:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from bicubic, {', '.join(PRESETS)}")
    return build_micro_edsr(config, seed=seed, name=preset)
