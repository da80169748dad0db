"""Direct numeric kernels on float32 feature maps.

Feature maps are numpy arrays shaped ``(C, H, W)`` or ``(N, C, H, W)``.
Every convolution accumulates taps one at a time into the output
(input channels outermost, then kernel rows, then kernel columns), using
separate elementwise multiply and add.  Each output element therefore sees
the same sequence of float32 operations wherever it sits in the window,
which is what makes independently computed patches agree bit for bit.
"""

import numpy as np

from .errors import ShapeError

DEMOD_EPS = 1e-8
LEAKY_SLOPE = 0.2
# Variance-preserving gains used when composing layers (StyleGAN2 convention).
ACT_GAIN = np.float32(np.sqrt(2.0))
UP_GAIN = np.float32(4.0)

BLUR3 = (np.outer([1.0, 2.0, 1.0], [1.0, 2.0, 1.0]) / 16.0).astype(np.float32)


def _as_features(x, name="x"):
    x = np.asarray(x, dtype=np.float32)
    if x.ndim not in (3, 4):
        raise ShapeError(f"{name} must be (C, H, W) or (N, C, H, W), got shape {x.shape}")
    return x


def _as_weights(w):
    w = np.asarray(w, dtype=np.float32)
    if w.ndim != 4:
        raise ShapeError(f"conv weights must be (out, in, kh, kw), got shape {w.shape}")
    return w


def conv2d_valid(x, w, bias=None, stride=1):
    """Unpadded 2-D cross-correlation.

    Output size is ``(H - kh) // stride + 1`` per axis, which for the default
    stride is ``H - (kh - 1)``.
    """
    x = _as_features(x)
    w = _as_weights(w)
    n_out, n_in, kh, kw = w.shape
    if x.shape[-3] != n_in:
        raise ShapeError(f"input has {x.shape[-3]} channels, weights expect {n_in}")
    h, wd = x.shape[-2:]
    if h < kh or wd < kw:
        raise ShapeError(f"input {h}x{wd} is smaller than kernel {kh}x{kw}")
    ho = (h - kh) // stride + 1
    wo = (wd - kw) // stride + 1
    out = np.zeros(x.shape[:-3] + (n_out, ho, wo), dtype=np.float32)
    ys = stride * (ho - 1) + 1
    xs = stride * (wo - 1) + 1
    for c in range(n_in):
        for i in range(kh):
            for j in range(kw):
                tap = w[:, c, i, j, None, None]
                out += tap * x[..., c : c + 1, i : i + ys : stride, j : j + xs : stride]
    if bias is not None:
        out += _bias(bias, n_out)
    return out


def tconv2d_stride2_valid(x, w):
    """Stride-2 transposed convolution without padding (scatter-add).

    Input pixel ``(y, x)`` adds ``x * w[:, :, a, b]`` to output ``(2y + a, 2x + b)``.
    Output size per axis is ``2 * (H - 1) + k``.
    """
    x = _as_features(x)
    w = _as_weights(w)
    n_out, n_in, kh, kw = w.shape
    if x.shape[-3] != n_in:
        raise ShapeError(f"input has {x.shape[-3]} channels, weights expect {n_in}")
    h, wd = x.shape[-2:]
    if h == 0 or wd == 0:
        raise ShapeError("transposed convolution input has zero spatial size")
    ho = 2 * (h - 1) + kh
    wo = 2 * (wd - 1) + kw
    out = np.zeros(x.shape[:-3] + (n_out, ho, wo), dtype=np.float32)
    for c in range(n_in):
        src = x[..., c : c + 1, :, :]
        for a in range(kh):
            for b in range(kw):
                out[..., a : a + 2 * h - 1 : 2, b : b + 2 * wd - 1 : 2] += w[:, c, a, b, None, None] * src
    return out


def blur3(x):
    """Depthwise valid convolution with the normalized [1, 2, 1] binomial kernel."""
    x = _as_features(x)
    h, wd = x.shape[-2:]
    if h < 3 or wd < 3:
        raise ShapeError(f"blur3 needs at least 3x3 input, got {h}x{wd}")
    out = np.zeros(x.shape[:-2] + (h - 2, wd - 2), dtype=np.float32)
    for i in range(3):
        for j in range(3):
            out += BLUR3[i, j] * x[..., i : i + h - 2, j : j + wd - 2]
    return out


def modulate_weights(w, style, demodulate=True, eps=DEMOD_EPS):
    """Scale each input channel of ``w`` by ``style`` and optionally demodulate."""
    w = _as_weights(w)
    style = np.asarray(style, dtype=np.float32).reshape(-1)
    if style.shape[0] != w.shape[1]:
        raise ShapeError(f"style has length {style.shape[0]}, weights have {w.shape[1]} input channels")
    wm = w * style[None, :, None, None]
    if demodulate:
        norm = np.sqrt(np.square(wm).sum(axis=(1, 2, 3)) + np.float32(eps))
        wm = wm * (np.float32(1.0) / norm)[:, None, None, None]
    return wm


def modulated_conv(x, w, style, demodulate=True):
    return conv2d_valid(x, modulate_weights(w, style, demodulate))


def modulated_tconv(x, w, style, demodulate=True):
    return tconv2d_stride2_valid(x, modulate_weights(w, style, demodulate))


def leaky_relu(x, slope=LEAKY_SLOPE):
    x = np.asarray(x, dtype=np.float32)
    return np.maximum(x, np.float32(slope) * x)


def activate(x, bias):
    """Bias, leaky ReLU and the activation gain, as every hidden layer applies them."""
    return leaky_relu(add_bias(x, bias)) * ACT_GAIN


def add_noise(x, noise, scale):
    """``out[c] = x[c] + scale[c] * noise`` with a single-channel noise map."""
    x = _as_features(x)
    noise = _as_features(noise, "noise")
    if noise.shape[-3] != 1:
        raise ShapeError(f"noise must have one channel, got {noise.shape[-3]}")
    if noise.shape[-2:] != x.shape[-2:]:
        raise ShapeError(f"noise is {noise.shape[-2:]}, features are {x.shape[-2:]}")
    return x + _bias(scale, x.shape[-3]) * noise


def add_bias(x, bias):
    x = _as_features(x)
    return x + _bias(bias, x.shape[-3])


def _bias(values, channels):
    values = np.asarray(values, dtype=np.float32).reshape(-1)
    if values.shape[0] != channels:
        raise ShapeError(f"expected {channels} per-channel values, got {values.shape[0]}")
    return values[:, None, None]


def pad_zeros(x, p=1):
    """Zero padding on both spatial axes; only the padded ablation uses it."""
    x = _as_features(x)
    widths = [(0, 0)] * (x.ndim - 2) + [(p, p), (p, p)]
    return np.pad(x, widths)
