"""Structure synthesizer: an implicit function over (z_g, z_l window, coordinates).

Each layer unfolds its input over a ``k x k`` neighbourhood, applies a
style-modulated 1x1 convolution and a leaky ReLU.  No padding is used, so
every layer trims ``k - 1`` pixels and an output pixel depends only on the
``1 + layers * (k - 1)`` wide input neighbourhood around it.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ShapeError
from .meter import NULL_METER

DIVERSITY_EPS = 1e-6


@dataclass(frozen=True)
class StructureConfig:
    layers: int = 2
    unfold_k: int = 3
    hidden: int = 8

    @property
    def margin(self):
        return self.layers * (self.unfold_k - 1)

    def validate(self):
        if self.layers < 1 or self.hidden < 1:
            raise ValueError("structure synthesizer needs at least one layer and one channel")
        if self.unfold_k < 1 or self.unfold_k % 2 == 0:
            raise ValueError(f"unfold_k must be odd, got {self.unfold_k}")


def layer_names(cfg):
    return [f"structure.{i}" for i in range(cfg.layers)]


def in_channels(cfg, zl_dim, layer):
    base = zl_dim + 3 if layer == 0 else cfg.hidden
    return base * cfg.unfold_k**2


# -- mapping network and per-layer styles ----------------------------------

def mapping(weights, z_g, depth):
    """Map z_g to the intermediate style latent: pixel norm, then a leaky MLP."""
    x = np.asarray(z_g, dtype=np.float32)
    x = x / np.sqrt(np.mean(np.square(x)) + np.float32(1e-8))
    for i in range(depth):
        x = kernels.leaky_relu(weights[f"mapping.{i}.weight"] @ x + weights[f"mapping.{i}.bias"]) * kernels.ACT_GAIN
    return x.astype(np.float32)


def layer_style(weights, name, w_latent):
    return (weights[f"{name}.style.weight"] @ w_latent + weights[f"{name}.style.bias"]).astype(np.float32)


def fused_modulated_conv(x, w, styles, weight_map, demodulate=True, transpose=False):
    """Blend K modulated convolutions pixel by pixel.

    ``weight_map`` has K channels and the spatial size of the convolution
    output.  Each style's filter is demodulated on its own before blending.
    """
    styles = list(styles)
    weight_map = np.asarray(weight_map, dtype=np.float32)
    if weight_map.shape[-3] != len(styles):
        raise ShapeError(f"map has {weight_map.shape[-3]} channels for {len(styles)} styles")
    op = kernels.modulated_tconv if transpose else kernels.modulated_conv
    out = None
    for k, style in enumerate(styles):
        y = op(x, w, style, demodulate)
        if weight_map.shape[-2:] != y.shape[-2:]:
            raise ShapeError(f"map is {weight_map.shape[-2:]}, conv output is {y.shape[-2:]}")
        term = weight_map[..., k : k + 1, :, :] * y
        out = term if out is None else out + term
    return out


def apply_modulated(x, weights, name, style, demodulate=True, transpose=False, fusion=None):
    """Modulated conv of layer ``name``; ``style`` is a w-latent or a list of them."""
    w = weights[f"{name}.weight"]
    if fusion is None:
        op = kernels.modulated_tconv if transpose else kernels.modulated_conv
        return op(x, w, layer_style(weights, name, style), demodulate)
    styles = [layer_style(weights, name, s) for s in style]
    return fused_modulated_conv(x, w, styles, fusion[name], demodulate, transpose)


# -- unfolding and forward pass ----------------------------------------------

def unfold(f, k):
    """Concatenate each pixel's ``k x k`` neighbourhood along channels.

    Output channel ``(i * k + j) * C + c`` holds input channel ``c`` at tap
    ``(i, j)`` (tap-major, row-major taps).  Border pixels without a full
    neighbourhood are dropped, so each spatial axis shrinks by ``k - 1``.
    """
    f = np.asarray(f, dtype=np.float32)
    if f.ndim not in (3, 4):
        raise ShapeError(f"unfold expects (C, H, W) or (N, C, H, W), got {f.shape}")
    h, w = f.shape[-2:]
    if h < k or w < k:
        raise ShapeError(f"input {h}x{w} is smaller than unfold size {k}")
    ho, wo = h - k + 1, w - k + 1
    taps = [f[..., i : i + ho, j : j + wo] for i in range(k) for j in range(k)]
    return np.concatenate(taps, axis=-3)


def forward_structure(z_g, z_l, grid, cfg, weights, mapping_depth, *, w_latent=None, fusion=None, meter=NULL_METER):
    """Structural features z_S for one z_l window (or a batch of windows).

    ``grid`` is the (3, H, W) coordinate planes (a CoordGrid is accepted) and
    must match ``z_l`` spatially.  Pass ``w_latent`` to skip the mapping
    network; for fused rendering it is a list of K latents and ``fusion``
    maps layer names to per-pixel style weights.
    """
    planes = getattr(grid, "planes", grid)
    z_l = np.asarray(z_l, dtype=np.float32)
    planes = np.asarray(planes, dtype=np.float32)
    if planes.shape[-2:] != z_l.shape[-2:] or planes.shape[-3] != 3:
        raise ShapeError(f"coordinate planes {planes.shape} do not match z_l window {z_l.shape}")
    size = min(z_l.shape[-2:])
    if size < cfg.margin + 1:
        raise ShapeError(f"z_l window {z_l.shape[-2:]} is smaller than the structure margin + 1 ({cfg.margin + 1})")
    if w_latent is None:
        w_latent = mapping(weights, z_g, mapping_depth)
    if planes.ndim < z_l.ndim:
        planes = np.broadcast_to(planes, z_l.shape[:-3] + planes.shape)
    x = meter.hold(np.concatenate([z_l, planes], axis=-3))
    meter.drop(z_l, planes)
    for name in layer_names(cfg):
        u = meter.hold(unfold(x, cfg.unfold_k))
        meter.drop(x)
        y = apply_modulated(u, weights, name, w_latent, fusion=fusion)
        x = meter.hold(kernels.activate(y, weights[f"{name}.bias"]))
        meter.drop(u)
    return x


def diversity_loss(z_l1, z_l2, z_s1, z_s2, eps=DIVERSITY_EPS):
    """Mode-seeking ratio ``|z_l1 - z_l2|_1 / (|z_S1 - z_S2|_1 + eps)``."""
    z_l1, z_l2 = np.asarray(z_l1, np.float64), np.asarray(z_l2, np.float64)
    z_s1, z_s2 = np.asarray(z_s1, np.float64), np.asarray(z_s2, np.float64)
    if z_l1.shape != z_l2.shape or z_s1.shape != z_s2.shape:
        raise ShapeError("diversity loss pairs must have matching shapes")
    return float(np.abs(z_l1 - z_l2).sum() / (np.abs(z_s1 - z_s2).sum() + eps))
