# %% [markdown]
# # Universal and partial attacks
#
# A universal perturbation is optimised on one set of images and applied to
# others.  A partial attack only touches the central quarter of the input and
# we measure how far the damage spreads outside it.

# %%
import tempfile

import numpy as np

from srab.attacks import AttackConfig, apply_universal, center_mask, partial_attack, universal_attack
from srab.cache import cached_training
from srab.evaluation import evaluate_attack, psnr
from srab.imageio import quantize
from srab.models import build_preset
from srab.samples import photo_crops, write_photo_dir
from srab.tensor import bicubic_resize

micro = cached_training("micro", [im for _, im in photo_crops(16, 192, seed=1)], steps=2000)
bicubic = build_preset("bicubic")
photos = write_photo_dir(tempfile.mkdtemp(), 16, 96, seed=2)

# %%
train, held = photos.subset(range(12)), photos.subset(range(12, 16))
delta = universal_attack(micro, train.lr, 24, 24, AttackConfig(4 / 255))
for x0, hr, name in zip(held.lr, held.hr, held.ids):
    clean = psnr(np.clip(micro.forward(x0), 0, 1), hr)
    hit = psnr(np.clip(micro.forward(quantize(apply_universal(x0, delta))), 0, 1), hr)
    print(f"{name:24s} PSNR vs HR {clean:6.2f} -> {hit:6.2f} dB")

# %% [markdown]
# ## Partial attack
#
# Outer-region SR-PSNR: lower means more damage leaked past the mask.

# %%
for model in (micro, bicubic):
    rep = evaluate_attack(model, photos, "partial", AttackConfig(8 / 255))
    print(f"{model.name:8s} outer-region SR-PSNR {rep.mean('sr_psnr'):.2f} dB")

# %% [markdown]
# For the bicubic operator the leak is confined to the kernel footprint.

# %%
x0 = photos.lr[0]
mask = center_mask(24, 24)
resid = bicubic_resize(partial_attack(bicubic, x0, mask, AttackConfig(8 / 255)).perturbation, 96, 96)
touched = np.any(resid != 0, axis=0)
rows = np.flatnonzero(touched.any(axis=1))
print("affected HR rows", rows.min(), "to", rows.max(), "; mask rows", 24, "to", 71)
