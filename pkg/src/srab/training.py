"""Desk-scale trainer for the micro SR network (Adam on per-pixel MSE)."""

import logging

import numpy as np

from . import tensor as T
from .errors import ConfigurationError
from .imageio import crop_to_multiple, derive_lr
from .models import build_micro_edsr, MicroEdsrConfig

log = logging.getLogger(__name__)

__all__ = ["Adam", "sample_patches", "train_micro_model", "smoothed"]


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _lr_pair(hr, scale):
    hr = crop_to_multiple(hr, scale)
    return hr, derive_lr(hr, scale)


def sample_patches(pairs, rng, batch, patch_size, scale):
    """Draw ``batch`` aligned (LR, HR) patch pairs; HR patches are ``patch_size`` square."""
    lp = patch_size // scale
    lrs, hrs = [], []
    for _ in range(batch):
        lr, hr = pairs[rng.integers(len(pairs))]
        y = rng.integers(lr.shape[-2] - lp + 1)
        x = rng.integers(lr.shape[-1] - lp + 1)
        lrs.append(lr[:, y:y + lp, x:x + lp])
        hrs.append(hr[:, y * scale:(y + lp) * scale, x * scale:(x + lp) * scale])
    return np.stack(lrs), np.stack(hrs)


def smoothed(losses, window=50):
    """Means of consecutive non-overlapping ``window``-step chunks."""
    losses = np.asarray(losses, dtype=np.float64)
    n = len(losses) // window
    if n == 0:
        return losses[:0]
    return losses[: n * window].reshape(n, window).mean(axis=1)


def train_micro_model(config, hr_images, steps=2000, patch_size=96, learning_rate=1e-3,
                      seed=0, batch_size=8, name="micro", progress=None):
    """Fit a micro EDSR to ``hr_images`` by minimising mean squared reconstruction error.

    LR inputs come from an antialiased bicubic /scale of each (centre-cropped)
    HR image; random aligned patches are drawn each step.  The per-step loss
    history is attached to the returned model as ``model.history``.

    :param config: :class:`MicroEdsrConfig` (``None`` for the default preset)
    :param hr_images: iterable of ``(3, H, W)`` arrays in ``[0, 1]``
    :param patch_size: HR patch side, divisible by the scale
    :param progress: optional callable ``(step, loss)`` invoked every step
    """
    config = config or MicroEdsrConfig()
    hr_images = [T.as_image(im) for im in hr_images]
    if not hr_images:
        raise ConfigurationError("training needs at least one image")
    if patch_size % config.scale:
        raise ConfigurationError(f"patch size {patch_size} not divisible by scale {config.scale}")
    smallest = min(min(im.shape[-2:]) for im in hr_images)
    if patch_size > smallest - smallest % config.scale:
        raise ConfigurationError(f"patch size {patch_size} exceeds smallest image side {smallest}")

    model = build_micro_edsr(config, seed=seed, name=name)
    if steps <= 0:
        return model
    pairs = [_lr_pair(im, config.scale)[::-1] for im in hr_images]
    rng = np.random.default_rng([seed, 1])

    kernels = model.kernels()
    params = [a for k in kernels for a in (k.weights, k.bias)]
    opt = Adam(params, lr=learning_rate)
    history = []
    for step in range(steps):
        lr, hr = sample_patches(pairs, rng, batch_size, patch_size, config.scale)
        sr, caches = model.forward_with_cache(lr)
        resid = sr - hr
        loss = float(np.mean(resid * resid))
        grads = {}
        model.backward(caches, 2.0 * resid / resid.size, grads)
        opt.step([g for k in kernels for g in grads[id(k)]])
        history.append(loss)
        if progress is not None:
            progress(step, loss)
        if step % 250 == 0:
            log.info("step %d loss %.6f", step, loss)

    for k in kernels:
        k.weights[...] = k.weights.astype(np.float32)
        k.bias[...] = k.bias.astype(np.float32)
    model.history = tuple(history)
    return model
