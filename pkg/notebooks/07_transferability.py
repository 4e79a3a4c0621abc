# %% [markdown]
# # Transferability
#
# Adversarial inputs crafted against one model (rows) are fed to every model
# (columns).  The diagonal is the white-box case.

# %%
import tempfile

from srab.cache import cached_training
from srab.evaluation import report_to_csv, transfer_matrix
from srab.models import build_preset
from srab.samples import photo_crops, write_photo_dir

train = [im for _, im in photo_crops(16, 192, seed=1)]
models = [cached_training("micro", train, steps=2000), cached_training("micro-large", train, steps=2000),
          build_preset("bicubic")]
photos = write_photo_dir(tempfile.mkdtemp(), 6, 96, seed=2)

# %%
print(report_to_csv(transfer_matrix(models, photos)))
