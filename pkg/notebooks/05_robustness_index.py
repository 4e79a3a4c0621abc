# %% [markdown]
# # Robustness index
#
# The index is the largest l1 norm of the attack-loss gradient over random
# points near the input.  No attack is run to compute it, yet images with a
# large index should be the ones an attack damages most.

# %%
import tempfile

from srab.cache import cached_training
from srab.evaluation import robustness_sweep
from srab.samples import photo_crops, write_photo_dir

micro = cached_training("micro", [im for _, im in photo_crops(16, 192, seed=1)], steps=2000)
photos = write_photo_dir(tempfile.mkdtemp(), 24, 96, seed=3)
report = robustness_sweep(micro, photos, alpha=1 / 255, n_samples=64)

# %%
for r in sorted(report.records, key=lambda r: r.robustness_index):
    print(f"{r.image_id:28s} index {r.robustness_index:8.2f}  SR-PSNR {r.sr_psnr:6.2f} dB")
print("Spearman:", report.correlation)
