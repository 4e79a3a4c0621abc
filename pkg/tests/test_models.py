import numpy as np
import pytest

from srab import tensor as T
from srab.errors import ConfigurationError
from srab.models import (MicroEdsrConfig, PixelShuffle, build_bicubic_model, build_micro_edsr, build_preset,
                         model_forward, model_input_gradient, SRModel, Conv2d)
from helpers import probe_gradient_check


def test_bicubic_constant_image(bicubic):
    y = model_forward(bicubic, np.full((3, 5, 6), 0.25))
    assert y.shape == (3, 20, 24)
    np.testing.assert_allclose(y, 0.25, atol=1e-15)


def test_bicubic_scale_one_is_identity(rng):
    m = build_bicubic_model(1)
    x = rng.random((3, 7, 5))
    np.testing.assert_array_equal(model_forward(m, x), x)


def test_bicubic_linear_under_attack(bicubic, rng):
    x, x0 = rng.random((3, 6, 6)), rng.random((3, 6, 6))
    lhs = model_forward(bicubic, x) - model_forward(bicubic, x0)
    np.testing.assert_allclose(lhs, T.bicubic_resize(x - x0, 24, 24), atol=1e-12)


def test_bicubic_gradient_is_transpose(bicubic, rng):
    x, g = rng.random((3, 5, 5)), rng.standard_normal((3, 20, 20))
    np.testing.assert_array_equal(model_input_gradient(bicubic, x, g), T.bicubic_resize_grad(g, (5, 5)))


@pytest.mark.parametrize("scale", [2, 4])
def test_micro_shape_law(rng, scale):
    m = build_micro_edsr(MicroEdsrConfig(channels=4, blocks=2, scale=scale))
    assert model_forward(m, rng.random((3, 5, 7))).shape == (3, scale * 5, scale * 7)
    assert model_forward(m, rng.random((2, 3, 5, 7))).shape == (2, 3, scale * 5, scale * 7)


def test_zero_blocks_shape():
    m = build_micro_edsr(MicroEdsrConfig(channels=3, blocks=0))
    assert model_forward(m, np.ones((3, 4, 6))).shape == (3, 16, 24)


def test_zero_weights_give_zero_output(rng):
    m = build_micro_edsr(MicroEdsrConfig(), zero=True)
    assert not np.any(model_forward(m, rng.random((3, 8, 8))))


def test_scale_matches_pixel_shuffle_product():
    m = build_preset("micro-large")
    factors = [l.factor for l in m._flat_layers() if isinstance(l, PixelShuffle)]
    assert np.prod(factors) == m.scale == 4
    with pytest.raises(ConfigurationError):
        SRModel("bad", "micro_edsr", 4, [Conv2d(T.ConvKernel.zeros(3, 3)), PixelShuffle(2)])


def test_seeded_init_is_bit_identical():
    a = build_micro_edsr(seed=11)
    b = build_micro_edsr(seed=11)
    c = build_micro_edsr(seed=12)
    for ka, kb in zip(a.kernels(), b.kernels()):
        assert np.array_equal(ka.weights, kb.weights) and np.array_equal(ka.bias, kb.bias)
    assert not np.array_equal(a.kernels()[0].weights, c.kernels()[0].weights)


def test_init_range_and_f32_exact():
    m = build_micro_edsr(MicroEdsrConfig(channels=8, blocks=1), seed=0)
    for k in m.kernels():
        bound = (k.in_channels * 9) ** -0.5
        assert np.abs(k.weights).max() <= bound
        assert np.array_equal(k.weights, k.weights.astype(np.float32).astype(np.float64))


@pytest.mark.parametrize("preset", ["micro", "micro-large"])
def test_presets(preset):
    m = build_preset(preset)
    cfg = m.config
    assert (cfg.channels, cfg.blocks) == {"micro": (16, 4), "micro-large": (32, 8)}[preset]
    assert cfg.residual_scaling == 0.1


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        build_preset("edsr")


def test_bad_config():
    with pytest.raises(ConfigurationError):
        MicroEdsrConfig(scale=3)
    with pytest.raises(ConfigurationError):
        MicroEdsrConfig(blocks=-1)


def test_zero_upstream_zero_gradient(micro_random, rng):
    x = rng.random((3, 6, 6))
    assert not np.any(model_input_gradient(micro_random, x, np.zeros((3, 24, 24))))


def test_shape_mismatch(micro_random, rng):
    with pytest.raises(ConfigurationError):
        model_forward(micro_random, rng.random((1, 6, 6)))
    with pytest.raises(ConfigurationError):
        model_input_gradient(micro_random, rng.random((3, 6, 6)), np.zeros((3, 20, 20)))


@pytest.mark.parametrize("fixture", ["tiny_micro", "micro_random", "bicubic"])
def test_input_gradient_finite_difference(request, fixture, rng):
    model = request.getfixturevalue(fixture)
    x = rng.random((3, 8, 8))
    err = probe_gradient_check(model.forward, model.input_gradient, x, rng)
    assert err < 1e-3


def test_batched_equals_single(micro_random, rng):
    x = rng.random((3, 3, 6, 5))
    batch = model_forward(micro_random, x)
    for i in range(3):
        np.testing.assert_allclose(batch[i], model_forward(micro_random, x[i]), rtol=0, atol=1e-13)
