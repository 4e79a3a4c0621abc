"""Attack-agnostic robustness index (a CLEVER-style gradient-norm statistic).

For random perturbations ``d_i`` uniform in ``[-alpha, alpha]`` per pixel the
index is ``max_i || grad L(X0 + d_i, X0) ||_1`` with ``L`` the SR attack loss.
Larger values mean a more easily attacked image/model pair.
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .attacks import _loss_and_grad
from .errors import ConfigurationError

__all__ = ["RobustnessReport", "robustness_index", "DEFAULT_SAMPLES"]

DEFAULT_SAMPLES = 1024


@dataclass
class RobustnessReport:
    index: float
    n_samples: int
    alpha: float
    seed: int
    samples: np.ndarray = field(default=None, repr=False)


def robustness_index(model, x0, alpha=1 / 255, n_samples=DEFAULT_SAMPLES, seed=0,
                     batch_size=32, keep_samples=True):
    """Max l1 norm of the attack-loss gradient over ``n_samples`` random points near ``x0``.

    Samples come from one ``default_rng(seed)`` stream in index order, so a
    run with more samples extends (never reshuffles) a run with fewer.  The
    perturbed points are deliberately not clipped to [0, 1].
    """
    x0 = T.as_image(x0)
    if x0.ndim != 3:
        raise ConfigurationError("robustness_index takes a single (C, H, W) image")
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    ref = model.forward(x0)
    values = []
    for start in range(0, n_samples, batch_size):
        m = min(batch_size, n_samples - start)
        d = rng.uniform(-alpha, alpha, size=(m,) + x0.shape)
        _, g = _loss_and_grad(model, x0 + d, ref)
        values.append(np.abs(g).sum(axis=(1, 2, 3)))
    values = np.concatenate(values)
    return RobustnessReport(float(values.max()), n_samples, alpha, seed, values if keep_samples else None)
