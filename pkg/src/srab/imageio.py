"""8-bit PNG input/output and image datasets."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import tensor as T
from .errors import DataError, UnsupportedBitDepthError

__all__ = ["quantize", "load_png", "save_png", "crop_to_multiple", "derive_lr", "Dataset", "load_image_dir"]

IMAGE_SUFFIXES = (".png", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff")
_EIGHT_BIT_MODES = {"RGB", "L", "P", "RGBA", "LA"}


def quantize(x):
    """Round to the 8-bit grid: ``round(255 x) / 255`` after clipping to [0, 1]."""
    return np.round(np.clip(x, 0.0, 1.0) * 255.0) / 255.0


def to_uint8(x):
    return np.round(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)


def load_png(path):
    """Read an 8-bit image file as a float64 ``(3, H, W)`` array in [0, 1].

    Grayscale inputs are replicated to three channels; alpha is dropped.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in _EIGHT_BIT_MODES:
                raise UnsupportedBitDepthError(f"{path}: unsupported bit depth (mode {mode!r})")
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except UnsupportedBitDepthError:
        raise
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return arr.transpose(2, 0, 1) / 255.0


def save_png(image, path):
    """Write a ``(3, H, W)`` (or ``(1, H, W)``) array as an 8-bit PNG."""
    image = T.as_image(image)
    if image.ndim != 3 or image.shape[0] not in (1, 3):
        raise DataError(f"can only save (1|3, H, W) images, got {image.shape}")
    data = to_uint8(image).transpose(1, 2, 0)
    if data.shape[2] == 1:
        data = data[:, :, 0]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    # fixed options and no metadata keep the bytes reproducible
    Image.fromarray(data).save(path, format="PNG", optimize=False, compress_level=6)


def crop_to_multiple(hr, scale):
    h, w = hr.shape[-2:]
    nh, nw = h - h % scale, w - w % scale
    top, left = (h - nh) // 2, (w - nw) // 2
    return hr[:, top:top + nh, left:left + nw]


def derive_lr(hr, scale=4):
    """Antialiased bicubic downscale of an HR image, quantized to 8 bits."""
    h, w = hr.shape[-2:]
    return quantize(T.bicubic_resize(hr, h // scale, w // scale, antialias=True))


@dataclass
class Dataset:
    """Named list of HR images, centre-cropped to multiples of ``scale``.

    ``lr`` holds the matching LR inputs (bicubic /scale, 8-bit).
    """

    name: str
    ids: list
    hr: list
    scale: int = 4
    lr: list = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.ids) != len(self.hr):
            raise DataError("ids and images differ in length")
        cropped = []
        for image_id, im in zip(self.ids, self.hr):
            im = T.as_image(im)
            if min(im.shape[-2:]) < 32:
                raise DataError(f"{image_id}: HR image {im.shape[-2:]} smaller than 32 px")
            cropped.append(crop_to_multiple(im, self.scale))
        self.hr = cropped
        if self.lr is None:
            self.lr = [derive_lr(im, self.scale) for im in self.hr]

    def __len__(self):
        return len(self.ids)

    def subset(self, indices, name=None):
        indices = list(indices)
        return Dataset(name or self.name, [self.ids[i] for i in indices], [self.hr[i] for i in indices],
                       self.scale, [self.lr[i] for i in indices])


def load_image_dir(path, name=None, scale=4):
    """Load every image file in ``path`` (sorted by file name) as a :class:`Dataset`."""
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"{path} is not a directory")
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise DataError(f"no images found in {path}")
    return Dataset(name or path.name, [p.stem for p in files], [load_png(p) for p in files], scale)
