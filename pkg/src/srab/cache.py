"""Trained-weight cache rooted at ``$SRAB_CACHE`` (default ``~/.cache/srab``)."""

import hashlib
import logging
import os
from pathlib import Path

import numpy as np

from .errors import DataError
from .models import PRESETS, build_preset
from .training import train_micro_model
from .weights import load_weights, save_weights

log = logging.getLogger(__name__)

__all__ = ["cache_dir", "resolve_weights", "cached_training"]


def cache_dir():
    return Path(os.environ.get("SRAB_CACHE") or Path.home() / ".cache" / "srab")


def resolve_weights(ref):
    """Turn a ``--weights`` argument into a model.

    ``ref`` is a weight file path, ``"bicubic"``, or a preset name looked up
    as ``<cache>/<preset>.sraw`` (written by ``srab train`` without ``--out``).
    """
    ref = str(ref)
    if ref == "bicubic":
        return build_preset("bicubic")
    path = Path(ref)
    if path.is_file():
        return load_weights(path)
    if ref in PRESETS:
        cached = cache_dir() / f"{ref}.sraw"
        if cached.is_file():
            return load_weights(cached)
        raise DataError(f"no cached weights for preset {ref!r} at {cached}; run `srab train` first")
    raise DataError(f"weights {ref!r} not found")


def _fingerprint(images):
    h = hashlib.sha256()
    for im in images:
        a = np.ascontiguousarray(im, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:12]


def cached_training(preset, hr_images, steps=2000, seed=0, patch_size=96, **kwargs):
    """Train ``preset`` on ``hr_images`` unless identical settings are already cached.

    The cache key covers the preset, step count, seed, patch size and the
    exact pixel data, so a hit reproduces the same weights bit for bit.
    """
    hr_images = list(hr_images)
    key = f"{preset}-n{steps}-s{seed}-p{patch_size}-{_fingerprint(hr_images)}"
    path = cache_dir() / f"{key}.sraw"
    hist = path.with_suffix(".history.npy")
    if path.is_file():
        log.info("loading cached weights %s", path)
        model = load_weights(path)
        model.history = tuple(np.load(hist)) if hist.is_file() else ()
        return model
    model = train_micro_model(PRESETS[preset], hr_images, steps=steps, seed=seed, patch_size=patch_size,
                              name=preset, **kwargs)
    save_weights(model, path)
    np.save(hist, np.asarray(model.history))
    return model
