# %% [markdown]
# # Basic attack across budgets
#
# LR-PSNR measures how visible the perturbation is; SR-PSNR compares the
# super-resolved attacked image with the super-resolved clean one.  The sweep
# below is the data behind an "SR-PSNR versus alpha" plot.

# %%
import tempfile

from srab.cache import cached_training
from srab.evaluation import evaluate_sweep, report_to_csv
from srab.models import build_preset
from srab.samples import photo_crops, write_photo_dir

micro = cached_training("micro", [im for _, im in photo_crops(16, 192, seed=1)], steps=2000)
bicubic = build_preset("bicubic")
photos = write_photo_dir(tempfile.mkdtemp(), 8, 96, seed=2)
alphas = [k / 255 for k in (1, 2, 4, 8, 16, 32)]

# %%
for model in (micro, bicubic):
    report = evaluate_sweep(model, photos, alphas)
    print(model.name)
    for row in report.summary():
        print(f"  alpha {row['alpha'] * 255:4.0f}/255  LR {row['mean_lr_psnr']:6.2f} dB  "
              f"SR {row['mean_sr_psnr']:6.2f} dB  SR vs HR {row['mean_sr_psnr_gt']:6.2f} dB")

# %% [markdown]
# The CSV form is what `srab evaluate` writes:

# %%
print(report_to_csv(report).splitlines()[:3])
