import numpy as np
import pytest

from srab.errors import ConfigurationError
from srab.models import MicroEdsrConfig, build_micro_edsr
from srab.robustness import robustness_index
from helpers import dense_bicubic


def test_zero_weight_model_gives_zero():
    zero = build_micro_edsr(MicroEdsrConfig(channels=4, blocks=1), zero=True)
    rep = robustness_index(zero, np.full((3, 6, 6), 0.5), n_samples=5)
    assert rep.index == 0.0 and not np.any(rep.samples)


def test_bicubic_single_sample_oracle(bicubic, rng):
    x0 = rng.random((3, 4, 4))
    alpha = 2 / 255
    rep = robustness_index(bicubic, x0, alpha, n_samples=1, seed=17)
    d = np.random.default_rng(17).uniform(-alpha, alpha, (1, 3, 4, 4))[0]
    b = dense_bicubic(4, 4)
    r = b @ d.ravel()
    expected = np.abs(b.T @ (r / np.linalg.norm(r))).sum()
    assert rep.index == pytest.approx(expected, rel=1e-12)


def test_deterministic_and_reported(tiny_micro, rng):
    x0 = rng.random((3, 5, 5))
    a = robustness_index(tiny_micro, x0, n_samples=3, seed=4)
    b = robustness_index(tiny_micro, x0, n_samples=3, seed=4)
    assert a.index == b.index
    assert (a.n_samples, a.seed, a.alpha) == (3, 4, 1 / 255)
    assert a.index == a.samples.max() and np.all(a.samples >= 0)


def test_more_samples_extend_fewer(tiny_micro, rng):
    x0 = rng.random((3, 5, 5))
    small = robustness_index(tiny_micro, x0, n_samples=5, seed=1, batch_size=2)
    big = robustness_index(tiny_micro, x0, n_samples=12, seed=1, batch_size=5)
    np.testing.assert_allclose(big.samples[:5], small.samples, rtol=1e-12)
    assert big.index >= small.index


def test_no_clipping_near_bounds(bicubic):
    # at an all-zero image half the samples fall below 0 and must stay there
    rep = robustness_index(bicubic, np.zeros((3, 4, 4)), n_samples=2)
    assert rep.index > 0


def test_invalid(tiny_micro):
    with pytest.raises(ConfigurationError):
        robustness_index(tiny_micro, np.zeros((3, 4, 4)), n_samples=0)
    with pytest.raises(ConfigurationError):
        robustness_index(tiny_micro, np.zeros((2, 3, 4, 4)))
