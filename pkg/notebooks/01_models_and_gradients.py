# %% [markdown]
# # Models and gradients
#
# Two kinds of x4 upscaler ship with the toolkit: a fixed bicubic operator and a
# small residual CNN ("micro") trained from scratch with numpy.  Every attack
# relies on the input gradient, so we start by checking it against finite
# differences.

# %%
import numpy as np

from srab.models import build_preset, model_forward, model_input_gradient
from srab.tensor import finite_diff_gradient

rng = np.random.default_rng(0)
x = rng.random((3, 8, 8))

for preset in ("bicubic", "micro", "micro-large"):
    model = build_preset(preset, seed=1)
    y = model_forward(model, x)
    u = rng.standard_normal(y.shape)
    analytic = model_input_gradient(model, x, u)
    numeric = finite_diff_gradient(lambda z: np.sum(u * model_forward(model, z)), x)
    err = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
    print(f"{preset:12s} out {y.shape}  relative gradient error {err:.2e}")

# %% [markdown]
# ## Training a micro model
#
# `cached_training` trains once per (preset, steps, seed, data) and stores the
# weights under `$SRAB_CACHE`.  A short run is enough to see the loss fall; the
# acceptance suite uses 2000 steps.

# %%
from srab.samples import photo_crops
from srab.training import smoothed, train_micro_model
from srab.models import PRESETS

images = [im for _, im in photo_crops(8, 96, seed=1)]
quick = train_micro_model(PRESETS["micro"], images, steps=100, patch_size=48, seed=0)
print("smoothed loss (20-step chunks):", np.round(smoothed(quick.history, 20), 5))
