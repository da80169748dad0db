"""Padding-free texture synthesizer and its zero-padded ablation twin.

A block holds ``convs_per_block`` modulated convolutions.  The first is the
upsampling conv: a stride-2 transposed 3x3 conv (``2 * in + 1`` pixels),
trimmed by one pixel on every side, then a 3x3 blur with the x4 upsampling
gain.  The rest are 3x3 valid convs.  Each conv is followed by noise, bias
and leaky ReLU.  A final modulated 1x1 toRGB conv (no demodulation) and
tanh produce the patch.

The trim drops the two border rows and columns of the transposed conv, which
only hold partial sums (their other tap would come from a z_S pixel outside
the window).  Without it, patches cut from different windows would disagree
near their borders.

Size law per block: ``out = 2 * in + 1 - 2 - 2 * convs_per_block``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ShapeError, UnachievableSizeError
from .meter import NULL_METER
from .structure import apply_modulated, layer_style

KERNEL = 3


@dataclass(frozen=True)
class TextureConfig:
    up_blocks: int = 2
    convs_per_block: int = 1
    channels: tuple = field(default=(8, 8))

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))

    @property
    def stride(self):
        return 2**self.up_blocks

    def validate(self):
        if self.up_blocks < 1:
            raise ValueError("texture synthesizer needs at least one up block")
        if self.convs_per_block < 1:
            raise ValueError("convs_per_block counts the upsampling conv and must be >= 1")
        if len(self.channels) != self.up_blocks:
            raise ValueError(f"channel schedule has {len(self.channels)} entries for {self.up_blocks} blocks")


@dataclass(frozen=True)
class Layer:
    """One modulated layer of the texture synthesizer.

    ``noise_id`` indexes the layer's noise stream (None for toRGB).
    """
    name: str
    kind: str  # "up", "conv" or "rgb"
    block: int
    noise_id: object


def layers(cfg):
    out = []
    nid = 0
    for b in range(cfg.up_blocks):
        out.append(Layer(f"texture.b{b}.up", "up", b, nid))
        nid += 1
        for j in range(cfg.convs_per_block - 1):
            out.append(Layer(f"texture.b{b}.conv{j}", "conv", b, nid))
            nid += 1
    out.append(Layer("texture.to_rgb", "rgb", cfg.up_blocks - 1, None))
    return out


def noise_layers(cfg):
    return [layer for layer in layers(cfg) if layer.noise_id is not None]


# -- shape calculus ------------------------------------------------------------

def block_out(size, cfg):
    return 2 * size + 1 - 2 - 2 * cfg.convs_per_block


def size_chain(zs_size, cfg):
    """Spatial size after each block, starting with the z_S size."""
    sizes = [zs_size]
    for _ in range(cfg.up_blocks):
        sizes.append(block_out(sizes[-1], cfg))
    return sizes


def min_zs_size(cfg):
    """Smallest odd z_S size for which every layer still fits its kernel."""
    s = 1
    while True:
        try:
            _check_sizes(s, cfg)
            return s
        except ShapeError:
            s += 2


def _check_sizes(zs_size, cfg):
    size = zs_size
    for layer in layers(cfg):
        if layer.kind == "up":
            size = 2 * size + 1 - 2
            if size < 3:
                raise ShapeError(f"{layer.name}: {size} pixels before blur, need 3")
            size -= 2
        elif layer.kind == "conv":
            if size < KERNEL:
                raise ShapeError(f"{layer.name}: input {size} is smaller than kernel {KERNEL}")
            size -= KERNEL - 1
    return size


def backward_shape(output_size, cfg):
    """z_S size whose forward chain ends exactly at ``output_size``."""
    size = output_size
    for _ in range(cfg.up_blocks):
        prev2 = size - 1 + 2 + 2 * cfg.convs_per_block
        if prev2 % 2:
            size = None
            break
        size = prev2 // 2
    if size is not None and size >= min_zs_size(cfg) and size % 2 == 1:
        return size
    raise UnachievableSizeError(output_size, _nearest(output_size, cfg))


def _nearest(target, cfg):
    achievable = []
    s = min_zs_size(cfg)
    while True:
        out = size_chain(s, cfg)[-1]
        achievable.append(out)
        if out > target:
            break
        s += 2
    below = [a for a in achievable if a < target]
    above = [a for a in achievable if a > target]
    return ([below[-1]] if below else []) + [above[0]]


# -- forward passes --------------------------------------------------------------

def forward_texture(z_s, z_g_latent, noise, cfg, weights, *, fusion=None, meter=NULL_METER):
    """Render an RGB patch from z_S.

    ``z_g_latent`` is the mapped style latent (a list of K latents when
    ``fusion`` is given).  ``noise`` maps each noise layer name to its
    single-channel window, sized to that layer's output; it may also be a
    callable taking the layer name, so windows are drawn only when needed.
    """
    x = np.asarray(z_s, dtype=np.float32)
    if x.shape[-1] % 2 == 0 or x.shape[-2] % 2 == 0:
        raise ShapeError(f"z_S must have odd spatial size, got {x.shape[-2:]}")
    for layer in layers(cfg):
        name = layer.name
        try:
            if layer.kind == "up":
                t = meter.hold(apply_modulated(x, weights, name, z_g_latent, transpose=True, fusion=fusion))
                meter.drop(x)
                y = meter.hold(kernels.blur3(t[..., 1:-1, 1:-1]) * kernels.UP_GAIN)
                meter.drop(t)
            elif layer.kind == "conv":
                y = meter.hold(apply_modulated(x, weights, name, z_g_latent, fusion=fusion))
                meter.drop(x)
            else:
                y = meter.hold(apply_modulated(x, weights, name, z_g_latent, demodulate=False, fusion=fusion))
                meter.drop(x)
                return np.tanh(kernels.add_bias(y, weights[f"{name}.bias"]))
        except ShapeError as exc:
            raise ShapeError(f"{name}: {exc}") from exc
        n = meter.hold(_noise_for(noise, name))
        y = kernels.add_noise(y, n, weights[f"{name}.noise_scale"])
        meter.drop(n)
        x = kernels.activate(y, weights[f"{name}.bias"])
    raise AssertionError("texture stack has no toRGB layer")


def forward_texture_padded(z_s, z_g_latent, noise, cfg, weights):
    """The conventional zero-padded stack: every layer keeps (or exactly doubles) its size.

    Only used as a differential baseline; the output of one block is
    ``2 * in`` pixels.
    """
    x = np.asarray(z_s, dtype=np.float32)
    for layer in layers(cfg):
        name = layer.name
        w = weights[f"{name}.weight"]
        style = layer_style(weights, name, z_g_latent)
        if layer.kind == "up":
            h, wd = x.shape[-2:]
            t = kernels.modulated_tconv(x, w, style)[..., : 2 * h, : 2 * wd]
            y = kernels.blur3(kernels.pad_zeros(t)) * kernels.UP_GAIN
        elif layer.kind == "conv":
            y = kernels.modulated_conv(kernels.pad_zeros(x), w, style)
        else:
            y = kernels.modulated_conv(x, w, style, demodulate=False)
            return np.tanh(kernels.add_bias(y, weights[f"{name}.bias"]))
        y = kernels.add_noise(y, _noise_for(noise, name), weights[f"{name}.noise_scale"])
        x = kernels.activate(y, weights[f"{name}.bias"])
    raise AssertionError("texture stack has no toRGB layer")


def _noise_for(noise, name):
    window = noise(name) if callable(noise) else noise[name]
    return np.asarray(window, dtype=np.float32)


def padded_size_chain(zs_size, cfg):
    return [zs_size * 2**b for b in range(cfg.up_blocks + 1)]
