"""Loss evaluators for the adversarial objective and its regularizers.

Nothing here trains anything.  The gradient-based regularizers (R1, path
length) are evaluated with central finite differences through plain
forward functions, which keeps them checkable against analytic values.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NumericError, ShapeError


@dataclass(frozen=True)
class LossWeights:
    ar: float = 1.0
    div: float = 1.0
    r1: float = 10.0
    path: float = 2.0

    def validate(self):
        for name in ("ar", "div", "r1", "path"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be non-negative")


@dataclass(frozen=True)
class DiscriminatorConfig:
    """fromRGB 1x1 conv to ``channels[0]``, then one stride-2 valid 3x3 conv per later entry.

    Two heads (realness and vertical position) are valid convolutions whose
    kernel covers the remaining feature map, reducing it to 1x1.
    """
    channels: tuple = field(default=(8, 16))

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))

    def validate(self):
        if len(self.channels) < 1:
            raise ValueError("discriminator needs at least one channel entry")


def disc_shape_chain(size, cfg):
    """Spatial size after fromRGB and each stride-2 conv."""
    sizes = [size]
    for _ in cfg.channels[1:]:
        size = (size - 3) // 2 + 1
        if size < 1:
            raise ShapeError("discriminator input is too small for its conv ladder")
        sizes.append(size)
    return sizes


def disc_param_shapes(size, cfg):
    shapes = {}
    c0 = cfg.channels[0]
    shapes["disc.from_rgb.weight"] = (c0, 3, 1, 1)
    shapes["disc.from_rgb.bias"] = (c0,)
    prev = c0
    for i, c in enumerate(cfg.channels[1:]):
        shapes[f"disc.conv{i}.weight"] = (c, prev, 3, 3)
        shapes[f"disc.conv{i}.bias"] = (c,)
        prev = c
    final = disc_shape_chain(size, cfg)[-1]
    for head in ("realness", "coord"):
        shapes[f"disc.{head}.weight"] = (1, prev, final, final)
        shapes[f"disc.{head}.bias"] = (1,)
    return shapes


def forward_discriminator(x, cfg, weights, size):
    """Scores for a patch (or a batch of patches) of spatial ``size``.

    Returns ``(realness, c_hat_y)``: floats for a single patch, arrays of
    shape (N,) for a batch.
    """
    x = np.asarray(x, dtype=np.float32)
    if x.shape[-3:] != (3, size, size):
        raise ShapeError(f"discriminator expects (3, {size}, {size}) input, got {x.shape}")
    h = kernels.leaky_relu(kernels.conv2d_valid(x, weights["disc.from_rgb.weight"], weights["disc.from_rgb.bias"]))
    for i in range(len(cfg.channels) - 1):
        h = kernels.leaky_relu(kernels.conv2d_valid(h, weights[f"disc.conv{i}.weight"], weights[f"disc.conv{i}.bias"], stride=2))
    real = kernels.conv2d_valid(h, weights["disc.realness.weight"], weights["disc.realness.bias"])
    coord = kernels.conv2d_valid(h, weights["disc.coord.weight"], weights["disc.coord.bias"])
    if x.ndim == 3:
        return float(real.reshape(())), float(coord.reshape(()))
    return real.reshape(-1), coord.reshape(-1)


# -- losses -------------------------------------------------------------------------

def softplus(x):
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def adv_losses(d_real, d_fake):
    """Non-saturating logistic losses ``(d_loss, g_loss)``."""
    d_real = np.asarray(d_real, dtype=np.float64).reshape(-1)
    d_fake = np.asarray(d_fake, dtype=np.float64).reshape(-1)
    if d_real.size == 0 or d_fake.size == 0:
        raise ShapeError("adversarial loss needs non-empty score batches")
    d_loss = softplus(-d_real).mean() + softplus(d_fake).mean()
    g_loss = softplus(-d_fake).mean()
    return float(d_loss), float(g_loss)


def aux_coord_loss(c_hat_y, c_bar_y):
    """Mean absolute error between predicted and target vertical coordinates."""
    c_hat_y = np.asarray(c_hat_y, dtype=np.float64).reshape(-1)
    c_bar_y = np.asarray(c_bar_y, dtype=np.float64).reshape(-1)
    if c_hat_y.shape != c_bar_y.shape:
        raise ShapeError(f"{c_hat_y.size} predictions for {c_bar_y.size} targets")
    return float(np.abs(c_hat_y - c_bar_y).mean())


def fake_vertical_target(i_y, v_scale):
    return float(np.tanh(i_y / v_scale))


def real_vertical_target(top, patch_h, image_h):
    """Patch center row mapped linearly onto [-1, 1] over the full image height."""
    if image_h < 2:
        return 0.0
    center = top + (patch_h - 1) / 2
    return 2.0 * center / (image_h - 1) - 1.0


def _finite(value):
    value = float(value)
    if not np.isfinite(value):
        raise NumericError(f"function returned non-finite value {value}")
    return value


def r1_penalty_fd(d_forward, x, h=1e-3):
    """``0.5 * |grad D(x)|^2`` with one central difference per input element."""
    if not 1e-4 <= h <= 1e-2:
        raise ValueError(f"step h must lie in [1e-4, 1e-2], got {h}")
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1)
    grad = np.empty(flat.size)
    for i in range(flat.size):
        probe = flat.copy()
        probe[i] = flat[i] + h
        up = _finite(d_forward(probe.reshape(x.shape)))
        probe[i] = flat[i] - h
        down = _finite(d_forward(probe.reshape(x.shape)))
        grad[i] = (up - down) / (2 * h)
    return 0.5 * float(np.dot(grad, grad))


def path_length_fd(g_forward, z, y, a, h=1e-3):
    """``(|J^T y| - a)^2`` where ``(J^T y)_i`` is a central difference along latent axis i."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    jty = np.empty(z.size)
    for i in range(z.size):
        step = np.zeros_like(z)
        step.flat[i] = h
        diff = np.asarray(g_forward(z + step), np.float64) - np.asarray(g_forward(z - step), np.float64)
        if diff.shape != y.shape:
            raise ShapeError(f"generator output {diff.shape} does not match probe {y.shape}")
        jty[i] = _finite(np.sum(diff * y) / (2 * h))
    return (float(np.linalg.norm(jty)) - a) ** 2


def total_objectives(d_adv, g_adv, ar, div, r1, path, weights=LossWeights()):
    """Weighted totals ``(d_total, g_total)``.

    ``g_adv`` is the generator's non-saturating loss, already in
    minimization form, so it enters with a plus sign.
    """
    comps = (d_adv, g_adv, ar, div, r1, path)
    if not all(np.isfinite(c) for c in comps):
        raise NumericError("objective components must be finite")
    d_total = d_adv + weights.ar * ar + weights.r1 * r1
    g_total = g_adv + weights.ar * ar + weights.div * div + weights.path * path
    return d_total, g_total
