"""Iterative sign-gradient attacks on super-resolution models.

All attacks optimise the SR-space Euclidean distance

    L(X, X_ref) = || f(X) - f(X_ref) ||_2

under an l-infinity budget ``alpha`` with ``T`` steps of size ``alpha / T``.
Untargeted attacks ascend L with ``X_ref = X0``; the targeted attack
descends it towards ``f(X*)``.

Because ``L(X0, X0) = 0`` has a zero gradient, untargeted attacks seed the
first iterate with uniform noise in ``[-alpha/T, alpha/T]`` drawn from
``numpy.random.default_rng(config.seed)``.  ``sign(0)`` is 0.

Every function accepts a single image ``(C, H, W)`` or a stack ``(N, C, H, W)``;
stacked images are attacked independently (per-image losses) and share the
seed noise pattern, so attacking a stack gives the same per-image answer as
attacking each image alone.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import tensor as T
from .errors import ConfigurationError

__all__ = [
    "AttackConfig",
    "Mask",
    "AdversarialResult",
    "parse_alpha",
    "attack_loss",
    "attack_loss_gradient",
    "ifgsm_step",
    "ifgsm_basic",
    "universal_attack",
    "apply_universal",
    "center_crop",
    "center_mask",
    "partial_attack",
    "targeted_attack",
]

CANONICAL_ALPHAS = tuple(k / 255 for k in (1, 2, 4, 8, 16, 32))


def parse_alpha(text):
    """Parse ``"8/255"`` style fractions (or plain floats) into a float budget."""
    text = str(text).strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            value = float(Fraction(int(num), int(den)))
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigurationError(f"cannot parse alpha {text!r}") from exc
    if not 0.0 <= value <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class AttackConfig:
    alpha: float
    iterations: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")

    @property
    def step_size(self):
        return self.alpha / self.iterations


@dataclass
class Mask:
    """Binary LR perturbation mask and its nearest-neighbour HR counterpart."""

    lr_mask: np.ndarray
    hr_mask: np.ndarray

    @classmethod
    def from_lr(cls, lr_mask, scale=4):
        m = np.asarray(lr_mask, dtype=np.float64)
        if m.ndim == 2:
            m = m[None]
        if m.ndim != 3 or m.shape[0] != 1:
            raise ConfigurationError(f"mask must be (H, W) or (1, H, W), got {m.shape}")
        if not np.all((m == 0) | (m == 1)):
            raise ConfigurationError("mask entries must be 0 or 1")
        hr = np.repeat(np.repeat(m, scale, axis=1), scale, axis=2)
        return cls(m, hr)

    @property
    def scale(self):
        return self.hr_mask.shape[-1] // self.lr_mask.shape[-1]


@dataclass
class AdversarialResult:
    """Outcome of an attack.

    ``loss_trace[n]`` is the attack loss at iterate ``n + 1`` (shape ``(T,)``
    or ``(T, N)`` for stacks; the targeted attack also records the start).
    """

    adversarial: np.ndarray
    original: np.ndarray
    loss_trace: np.ndarray
    config: AttackConfig
    kind: str = "basic"

    @property
    def perturbation(self):
        return self.adversarial - self.original


def _check_pair(x, ref):
    x = T.as_image(x)
    ref = T.as_image(ref)
    if x.shape[-3:] != ref.shape[-3:] or (ref.ndim == 4 and ref.shape != x.shape):
        raise ConfigurationError(f"shape mismatch: {x.shape} vs {ref.shape}")
    return x, ref


def _norms(r):
    # per-image Euclidean norm over (C, H, W)
    return np.sqrt(np.sum(r * r, axis=(-3, -2, -1), keepdims=True))


def _loss_and_grad(model, x, ref_sr, weight=None, need_grad=True):
    """Loss ``||(f(x) - ref_sr) * weight||`` and its input gradient (zero where the loss is 0)."""
    y, caches = model.forward_with_cache(x)
    r = y - ref_sr
    if weight is not None:
        r = r * weight
    norm = _norms(r)
    loss = norm.reshape(norm.shape[:-3]) if norm.ndim == 4 else float(norm.reshape(()))
    if not need_grad:
        return loss, None
    safe = np.where(norm > 0, norm, 1.0)
    upstream = np.where(norm > 0, r / safe, 0.0)
    if weight is not None:
        upstream = upstream * weight
    return loss, model.backward(caches, upstream)


def attack_loss(model, x, x_ref):
    """``||f(x) - f(x_ref)||_2`` over all SR elements; an array for stacks."""
    x, x_ref = _check_pair(x, x_ref)
    return _loss_and_grad(model, x, model.forward(x_ref), need_grad=False)[0]


def attack_loss_gradient(model, x, x_ref):
    """Gradient of :func:`attack_loss` w.r.t. ``x``: ``J^T (r / ||r||)``, zero when ``r = 0``."""
    x, x_ref = _check_pair(x, x_ref)
    return _loss_and_grad(model, x, model.forward(x_ref))[1]


def _project(x_tilde, x0, alpha):
    delta = np.clip(x_tilde - x0, -alpha, alpha)
    return np.clip(x0 + delta, 0.0, 1.0)


def ifgsm_step(model, x, x0, alpha, step_size, ref_sr=None, direction=1.0, weight=None, lr_mask=None):
    """One I-FGSM update: signed-gradient step, clip to [0, 1], clip to the budget around ``x0``.

    :param ref_sr: reference SR output (defaults to ``f(x0)``)
    :param direction: +1 ascends the loss (untargeted), -1 descends it (targeted)
    :param weight: optional HR weighting of the SR residual (partial attacks)
    :param lr_mask: optional LR mask multiplying the step
    :return: ``(next_iterate, loss_at_x)``
    """
    if ref_sr is None:
        ref_sr = model.forward(x0)
    loss, grad = _loss_and_grad(model, x, ref_sr, weight)
    step = step_size * np.sign(grad)
    if lr_mask is not None:
        step = step * lr_mask
    x_tilde = np.clip(x + direction * step, 0.0, 1.0)
    return _project(x_tilde, x0, alpha), loss


def _seed_noise(config, shape, lr_mask=None):
    rng = np.random.default_rng(config.seed)
    s = config.step_size
    u = rng.uniform(-s, s, size=shape)
    if lr_mask is not None:
        u = u * lr_mask
    return u


def _untargeted(model, x0, config, weight=None, lr_mask=None, kind="basic"):
    x0 = T.as_image(x0)
    if np.any(x0 < 0) or np.any(x0 > 1):
        raise ConfigurationError("input image must lie in [0, 1]")
    ref_sr = model.forward(x0)
    u = _seed_noise(config, x0.shape[-3:], lr_mask)
    x = _project(np.clip(x0 + u, 0.0, 1.0), x0, config.alpha)
    trace = []
    for _ in range(config.iterations - 1):
        x, loss = ifgsm_step(model, x, x0, config.alpha, config.step_size, ref_sr,
                             weight=weight, lr_mask=lr_mask)
        trace.append(loss)
    trace.append(_loss_and_grad(model, x, ref_sr, weight, need_grad=False)[0])
    if lr_mask is not None:
        # belt and braces: nothing outside the mask may move, bit for bit
        x = np.where(lr_mask > 0, x, x0)
    return AdversarialResult(x, x0, np.array(trace), config, kind)


def ifgsm_basic(model, x0, config):
    """Untargeted I-FGSM on the whole image (T iterations, the first one seeded)."""
    return _untargeted(model, x0, config)


def center_crop(image, crop_h, crop_w):
    """Centre crop with offsets ``floor((H - h) / 2)``, ``floor((W - w) / 2)``."""
    h, w = image.shape[-2:]
    if crop_h > h or crop_w > w:
        raise ConfigurationError(f"image {h}x{w} smaller than crop {crop_h}x{crop_w}")
    top, left = (h - crop_h) // 2, (w - crop_w) // 2
    return image[..., top:top + crop_h, left:left + crop_w]


def universal_attack(model, images, crop_h, crop_w, config, batch_size=16):
    """Image-agnostic perturbation maximising the mean attack loss over ``images``.

    Each image is centre-cropped to ``crop_h x crop_w``; adversarial inputs are
    ``clip(X0_k + delta, 0, 1)`` and the gradient flows through that clip.

    :return: ``delta`` of shape ``(C, crop_h, crop_w)`` with ``|delta| <= alpha``
    """
    images = list(images)
    if not images:
        raise ConfigurationError("universal attack needs at least one image")
    crops = np.stack([center_crop(T.as_image(im), crop_h, crop_w) for im in images])
    chunks = [slice(i, i + batch_size) for i in range(0, len(crops), batch_size)]
    refs = [model.forward(crops[c]) for c in chunks]
    k = len(crops)

    delta = _seed_noise(config, crops.shape[1:])
    for _ in range(config.iterations - 1):
        grad = np.zeros_like(delta)
        for c, ref in zip(chunks, refs):
            shifted = crops[c] + delta
            _, g = _loss_and_grad(model, np.clip(shifted, 0.0, 1.0), ref)
            g = np.where((shifted >= 0.0) & (shifted <= 1.0), g, 0.0)
            grad += g.sum(axis=0)
        grad /= k
        delta = np.clip(delta + config.step_size * np.sign(grad), -config.alpha, config.alpha)
    return delta


def apply_universal(image, delta):
    """Add ``delta`` to the centre region of ``image`` and clip it to [0, 1]."""
    image = T.as_image(image)
    delta = T.as_image(delta)
    if delta.shape[-3] != image.shape[-3]:
        raise ConfigurationError(f"delta has {delta.shape[-3]} channels, image {image.shape[-3]}")
    h, w = delta.shape[-2:]
    region = center_crop(image, h, w)
    out = image.copy()
    center_crop(out, h, w)[...] = np.clip(region + delta, 0.0, 1.0)
    return out


def center_mask(height, width, scale=4):
    """Mask of the central quarter: ones for ``floor(w/4) <= x < floor(3w/4)``, same for y."""
    if height < 4 or width < 4:
        raise ConfigurationError(f"mask dims must be >= 4, got {height}x{width}")
    m = np.zeros((1, height, width))
    m[:, height // 4:(3 * height) // 4, width // 4:(3 * width) // 4] = 1.0
    return Mask.from_lr(m, scale)


def partial_attack(model, x0, mask, config):
    """I-FGSM restricted to ``mask``; damage is measured only where the HR mask is 0."""
    x0 = T.as_image(x0)
    if mask.lr_mask.shape[-2:] != x0.shape[-2:]:
        raise ConfigurationError(f"mask {mask.lr_mask.shape[-2:]} does not match image {x0.shape[-2:]}")
    return _untargeted(model, x0, config, weight=1.0 - mask.hr_mask, lr_mask=mask.lr_mask, kind="partial")


def targeted_attack(model, x0, x_target, config):
    """Sign-gradient descent pulling ``f(X)`` towards ``f(x_target)``.

    No seed step is needed: the gradient at ``x0`` is non-zero unless
    ``f(x0) = f(x_target)``.  Returns the iterate with the lowest loss seen
    (the start included), so the loss never ends above its initial value.
    ``loss_trace[0]`` is the starting loss.
    """
    x0, x_target = _check_pair(x0, x_target)
    if np.any(x0 < 0) or np.any(x0 > 1):
        raise ConfigurationError("input image must lie in [0, 1]")
    ref_sr = model.forward(x_target)
    x = x0.copy()
    best = x0.copy()
    best_loss = None
    trace = []
    for _ in range(config.iterations):
        x_next, loss = ifgsm_step(model, x, x0, config.alpha, config.step_size, ref_sr, direction=-1.0)
        best, best_loss = _keep_best(best, best_loss, x, loss)
        trace.append(loss)
        x = x_next
    loss = _loss_and_grad(model, x, ref_sr, need_grad=False)[0]
    best, best_loss = _keep_best(best, best_loss, x, loss)
    trace.append(loss)
    return AdversarialResult(best, x0, np.array(trace), config, "targeted")


def _keep_best(best, best_loss, x, loss):
    if best_loss is None:
        return x.copy(), loss
    if np.ndim(loss) == 0:
        return (x.copy(), loss) if loss < best_loss else (best, best_loss)
    better = loss < best_loss
    best = np.where(better[:, None, None, None], x, best)
    return best, np.where(better, loss, best_loss)
