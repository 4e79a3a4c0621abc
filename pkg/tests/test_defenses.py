import itertools

import numpy as np
import pytest

from srab import tensor as T
from srab.defenses import DIHEDRAL, dihedral, dihedral_inverse, resize_defense, self_ensemble
from srab.errors import ConfigurationError


def test_eight_distinct_transforms(rng):
    x = rng.random((1, 4, 4))
    outs = {dihedral(x, k, f).tobytes() for k, f in DIHEDRAL}
    assert len(DIHEDRAL) == 8 and len(outs) == 8


@pytest.mark.parametrize("k,flip", DIHEDRAL)
def test_round_trip_exact(rng, k, flip):
    x = rng.random((2, 3, 5, 7))
    np.testing.assert_array_equal(dihedral_inverse(dihedral(x, k, flip), k, flip), x)


def test_resize_constant_image(micro_random):
    x = np.full((3, 7, 6), 0.4)
    np.testing.assert_allclose(resize_defense(micro_random, x), micro_random.forward(x), atol=1e-12)


def test_resize_matches_definition(tiny_micro, rng):
    x = rng.random((3, 8, 9))
    restored = np.clip(T.bicubic_resize(T.bicubic_resize(x, 7, 8), 8, 9), 0, 1)
    np.testing.assert_array_equal(resize_defense(tiny_micro, x), tiny_micro.forward(restored))


def test_resize_degenerate(tiny_micro):
    with pytest.raises(ConfigurationError):
        resize_defense(tiny_micro, np.zeros((3, 1, 5)))


def test_ensemble_constant_image(bicubic):
    # random conv kernels are not rotation-symmetric, so only an equivariant model keeps f(c) here
    x = np.full((3, 6, 6), 0.3)
    np.testing.assert_allclose(self_ensemble(bicubic, x), 0.3, atol=1e-12)


def test_ensemble_bicubic_is_plain_forward(bicubic, rng):
    x = rng.random((3, 6, 5))
    np.testing.assert_allclose(self_ensemble(bicubic, x), np.clip(bicubic.forward(x), 0, 1), atol=1e-9)


def test_ensemble_order_invariant(tiny_micro, rng):
    x = rng.random((3, 5, 5))
    outs = [dihedral_inverse(tiny_micro.forward(np.ascontiguousarray(dihedral(x, k, f))), k, f)
            for k, f in DIHEDRAL]
    ref = self_ensemble(tiny_micro, x)
    for perm in itertools.islice(itertools.permutations(range(8)), 0, 40320, 5000):
        acc = sum(outs[i] for i in perm) / 8
        np.testing.assert_allclose(np.clip(acc, 0, 1), ref, atol=1e-12)


def test_ensemble_clipped(tiny_micro, rng):
    y = self_ensemble(tiny_micro, rng.random((2, 3, 4, 4)))
    assert y.shape == (2, 3, 16, 16) and y.min() >= 0 and y.max() <= 1
