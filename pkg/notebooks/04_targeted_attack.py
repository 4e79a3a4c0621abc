# %% [markdown]
# # Targeted attack
#
# Instead of pushing the output away from the clean SR image, the targeted
# attack pulls it towards the SR image of another input: here a second crop of
# the same scene, displaced by a few pixels.

# %%
from srab.attacks import AttackConfig, attack_loss, targeted_attack
from srab.cache import cached_training
from srab.imageio import derive_lr
from srab.samples import photo_crops

images = [im for _, im in photo_crops(16, 192, seed=1)]
micro = cached_training("micro", images, steps=2000)
hr = images[0]
x0 = derive_lr(hr[:, 0:96, 0:96])
target = derive_lr(hr[:, 6:102, 8:104])

# %%
for k in (4, 16):
    res = targeted_attack(micro, x0, target, AttackConfig(k / 255))
    print(f"alpha {k:2d}/255  distance to target SR: {attack_loss(micro, x0, target):.3f} -> "
          f"{attack_loss(micro, res.adversarial, target):.3f}")
