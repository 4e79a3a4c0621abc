"""Binary weight files (``.sraw``).

Layout, all little-endian::

    b"SRAW"                 magic
    u8                      format version (1)
    u16 + bytes             model name, UTF-8, length-prefixed
    u8                      model kind (0 = bicubic, 1 = micro_edsr)
    u32 u32 u32 f64         scale, channels, blocks, residual scaling
    u32                     tensor count
    per tensor:
        u8                  rank
        u32 * rank          dims
        f32 * prod(dims)    values

Tensors appear as (weights, bias) for each convolution in forward order.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagicError, VersionMismatchError, ShapeMismatchError, TruncatedFileError, WeightFileError
from .models import MicroEdsrConfig, build_bicubic_model, build_micro_edsr

__all__ = ["MAGIC", "VERSION", "save_weights", "load_weights", "dumps", "loads"]

MAGIC = b"SRAW"
VERSION = 1
_KINDS = {"bicubic": 0, "micro_edsr": 1}


def dumps(model):
    cfg = model.config
    channels, blocks, scaling = (cfg.channels, cfg.blocks, cfg.residual_scaling) if cfg else (0, 0, 0.0)
    name = model.name.encode("utf-8")
    parts = [MAGIC, struct.pack("<B", VERSION), struct.pack("<H", len(name)), name,
             struct.pack("<BIIId", _KINDS[model.kind], model.scale, channels, blocks, scaling)]
    tensors = [a for k in model.kernels() for a in (k.weights, k.bias)]
    parts.append(struct.pack("<I", len(tensors)))
    for t in tensors:
        parts.append(struct.pack("<B", t.ndim) + struct.pack(f"<{t.ndim}I", *t.shape))
        parts.append(t.astype("<f4").tobytes())
    return b"".join(parts)


def save_weights(model, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(model))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise TruncatedFileError(f"truncated file: wanted {n} bytes at offset {self.pos}, "
                                     f"only {len(self.buf) - self.pos} left")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(buf):
    r = _Reader(bytes(buf))
    if r.take(4) != MAGIC:
        raise BadMagicError("bad magic: not an SRAW weight file")
    (version,) = r.unpack("<B")
    if version != VERSION:
        raise VersionMismatchError(f"version mismatch: file has {version}, reader supports {VERSION}")
    (name_len,) = r.unpack("<H")
    name = r.take(name_len).decode("utf-8")
    kind, scale, channels, blocks, scaling = r.unpack("<BIIId")
    if kind == _KINDS["bicubic"]:
        model = build_bicubic_model(scale)
        model.name = name
    elif kind == _KINDS["micro_edsr"]:
        cfg = MicroEdsrConfig(channels=channels, blocks=blocks, residual_scaling=scaling, scale=scale)
        model = build_micro_edsr(cfg, name=name, zero=True)
    else:
        raise WeightFileError(f"unknown model kind {kind}")

    (count,) = r.unpack("<I")
    slots = [(k, attr) for k in model.kernels() for attr in ("weights", "bias")]
    if count != len(slots):
        raise ShapeMismatchError(f"shape mismatch: file holds {count} tensors, model needs {len(slots)}")
    for kernel, attr in slots:
        (ndim,) = r.unpack("<B")
        dims = r.unpack(f"<{ndim}I")
        expected = getattr(kernel, attr).shape
        if tuple(dims) != expected:
            raise ShapeMismatchError(f"shape mismatch: tensor {dims} where {expected} expected")
        n = int(np.prod(dims))
        values = np.frombuffer(r.take(4 * n), dtype="<f4").astype(np.float64)
        setattr(kernel, attr, values.reshape(dims))
    if r.pos != len(r.buf):
        raise WeightFileError(f"{len(r.buf) - r.pos} trailing bytes after last tensor")
    return model


def load_weights(path):
    return loads(Path(path).read_bytes())
