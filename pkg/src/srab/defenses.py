"""Inference-time defenses: resize-and-restore and geometric self-ensemble."""

import numpy as np

from . import tensor as T
from .errors import ConfigurationError

__all__ = ["DIHEDRAL", "dihedral", "dihedral_inverse", "resize_defense", "self_ensemble"]

# (quarter turns, mirror first) for the 8 symmetries of the square
DIHEDRAL = tuple((k, flip) for flip in (False, True) for k in range(4))


def dihedral(x, k, flip):
    if flip:
        x = np.flip(x, axis=-1)
    return np.rot90(x, k, axes=(-2, -1))


def dihedral_inverse(x, k, flip):
    x = np.rot90(x, -k, axes=(-2, -1))
    if flip:
        x = np.flip(x, axis=-1)
    return x


def resize_defense(model, x):
    """Shrink the input by one pixel in each dimension, resize it back, then super-resolve."""
    x = T.as_image(x)
    h, w = x.shape[-2:]
    if h < 2 or w < 2:
        raise ConfigurationError(f"resize defense needs H, W >= 2, got {h}x{w}")
    restored = T.bicubic_resize(T.bicubic_resize(x, h - 1, w - 1), h, w)
    return model.forward(np.clip(restored, 0.0, 1.0))


def self_ensemble(model, x):
    """Average of ``g^-1(f(g(x)))`` over the 8 dihedral transforms, clipped to [0, 1]."""
    x = T.as_image(x)
    acc = None
    for k, flip in DIHEDRAL:
        y = dihedral_inverse(model.forward(np.ascontiguousarray(dihedral(x, k, flip))), k, flip)
        acc = y.copy() if acc is None else acc + y
    return np.clip(acc / len(DIHEDRAL), 0.0, 1.0)
