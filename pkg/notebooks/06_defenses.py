# %% [markdown]
# # Defenses
#
# Two inference-time defenses: shrinking the input by one pixel and resizing it
# back, and averaging the outputs of the 8 flips and rotations of the input.

# %%
import tempfile

import numpy as np

from srab.attacks import AttackConfig
from srab.cache import cached_training
from srab.defenses import resize_defense, self_ensemble
from srab.evaluation import attack_images, psnr
from srab.imageio import quantize
from srab.samples import photo_crops, write_photo_dir

train = [im for _, im in photo_crops(16, 192, seed=1)]
photos = write_photo_dir(tempfile.mkdtemp(), 8, 96, seed=2)

# %%
for preset in ("micro", "micro-large"):
    model = cached_training(preset, train, steps=2000)
    adv = [quantize(x) for x in attack_images(model, photos, "basic", AttackConfig(8 / 255))]
    rows = []
    for x0, x in zip(photos.lr, adv):
        ref = np.clip(model.forward(x0), 0, 1)
        rows.append((psnr(ref, np.clip(model.forward(x), 0, 1)),
                     psnr(ref, np.clip(resize_defense(model, x), 0, 1)),
                     psnr(ref, self_ensemble(model, x))))
    none, resize, ens = np.mean(rows, axis=0)
    print(f"{preset:12s} undefended {none:.2f} dB  resize {resize:.2f} dB  ensemble {ens:.2f} dB")
