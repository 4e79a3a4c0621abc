"""Small natural-photo corpora cut from the photographs bundled with scikit-image.

Handy for demos and tests when no benchmark set (Set5, BSD100, ...) is at
hand.  Requires the optional ``scikit-image`` dependency.
"""

from pathlib import Path

import numpy as np

from .imageio import save_png, load_image_dir

__all__ = ["SOURCES", "photo_crops", "write_photo_dir"]

# (loader name, area-downscale factor) -- photographs first, textures after
SOURCES = [
    ("astronaut", 2),
    ("chelsea", 1),
    ("coffee", 2),
    ("rocket", 2),
    ("hubble_deep_field", 2),
    ("immunohistochemistry", 2),
    ("retina", 4),
    ("stereo_motorcycle", 2),
    ("camera", 2),
    ("brick", 2),
    ("grass", 2),
    ("gravel", 2),
    ("moon", 2),
    ("coins", 1),
    ("cat", 1),
    ("cell", 2),
]


def _load_source(name):
    from skimage import data

    im = getattr(data, name)()
    if name == "stereo_motorcycle":
        im = im[0]
    im = np.asarray(im, dtype=np.float64) / 255.0
    if im.ndim == 2:
        im = np.repeat(im[:, :, None], 3, axis=2)
    return im[:, :, :3].transpose(2, 0, 1)


def _area_downscale(im, factor):
    if factor == 1:
        return im
    c, h, w = im.shape
    h, w = h - h % factor, w - w % factor
    return im[:, :h, :w].reshape(c, h // factor, factor, w // factor, factor).mean(axis=(2, 4))


def photo_crops(count, size=96, seed=0, min_std=0.06):
    """Return ``count`` (name, (3, size, size) image) pairs, cycling through :data:`SOURCES`.

    Crops whose pixel standard deviation is below ``min_std`` (flat sky,
    empty background) are redrawn.
    """
    rng = np.random.default_rng(seed)
    cache = {}
    out = []
    for i in range(count):
        name, factor = SOURCES[i % len(SOURCES)]
        if name not in cache:
            cache[name] = _area_downscale(_load_source(name), factor)
        src = cache[name]
        for _ in range(100):
            y = rng.integers(src.shape[1] - size + 1)
            x = rng.integers(src.shape[2] - size + 1)
            crop = src[:, y:y + size, x:x + size]
            if crop.std() >= min_std:
                break
        out.append((f"{i:03d}_{name}", np.round(crop * 255.0) / 255.0))
    return out


def write_photo_dir(path, count, size=96, seed=0):
    """Write :func:`photo_crops` as PNG files into ``path`` and load it back as a Dataset."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for name, im in photo_crops(count, size, seed):
        save_png(im, path / f"{name}.png")
    return load_image_dir(path)
