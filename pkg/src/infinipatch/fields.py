"""Counter-based Gaussian fields addressed by global integer coordinates.

A value is a pure function of ``(seed, stream, layer, channel, y, x)``:
the key is absorbed one word at a time through the SplitMix64 finalizer,
the result seeds a two-step SplitMix64 sequence, and the two 64-bit words
become uniforms for a Box-Muller transform whose cosine branch is kept.
Nothing is stored, so any two windows agree exactly wherever they overlap.
"""

import enum
from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG53 = 2.0**-53


class Stream(enum.IntEnum):
    GLOBAL = 1
    LOCAL = 2
    NOISE = 3
    WEIGHT = 4


@dataclass(frozen=True)
class FieldSpec:
    seed: int
    stream: Stream
    channels: int = 1
    layer_id: int = 0


def _u64(values):
    """Wrap integers (possibly negative) to uint64 two's complement."""
    arr = np.asarray(values)
    if arr.dtype == np.uint64:
        return arr
    return arr.astype(np.int64).view(np.uint64)


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _absorb(h, v):
    return _mix((h ^ v) + _GAMMA)


def _key(seed, stream, layer_id):
    with np.errstate(over="ignore"):
        h = _absorb(np.asarray(int(seed) & _MASK, dtype=np.uint64), np.uint64(int(stream)))
        return _absorb(h, np.asarray(int(layer_id) & _MASK, dtype=np.uint64))


def gaussian_at(key, ch, y, x):
    """Standard normal deviates for broadcastable integer arrays ``ch, y, x``."""
    with np.errstate(over="ignore"):
        h = _absorb(key, _u64(ch))
        h = _absorb(h, _u64(y))
        h = _absorb(h, _u64(x))
        w1 = _mix(h + _GAMMA)
        w2 = _mix(h + _GAMMA + _GAMMA)
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_NEG53
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def field_window(spec, origin, h, w):
    """``(spec.channels, h, w)`` float32 window whose pixel (r, c) sits at origin + (r, c)."""
    if h < 1 or w < 1:
        raise ValueError(f"window size must be positive, got {h}x{w}")
    key = _key(spec.seed, spec.stream, spec.layer_id)
    ch = np.arange(spec.channels, dtype=np.int64)[:, None, None]
    ys = (int(origin[0]) + np.arange(h, dtype=np.int64))[None, :, None]
    xs = (int(origin[1]) + np.arange(w, dtype=np.int64))[None, None, :]
    return gaussian_at(key, ch, ys, xs).astype(np.float32)


def sample_global(seed, dim):
    """The global latent z_g: ``dim`` standard normal values."""
    key = _key(seed, Stream.GLOBAL, 0)
    return gaussian_at(key, np.arange(dim, dtype=np.int64), 0, 0).astype(np.float32)


def sample_local_window(spec, origin, h, w):
    return field_window(spec, origin, h, w)


def sample_noise_window(spec, origin, h, w):
    if spec.stream != Stream.NOISE:
        raise ValueError(f"noise windows need a NOISE stream, got {spec.stream!r}")
    return field_window(FieldSpec(spec.seed, Stream.NOISE, 1, spec.layer_id), origin, h, w)


def local_spec(seed, channels):
    return FieldSpec(seed, Stream.LOCAL, channels)


def noise_spec(seed, layer_id):
    return FieldSpec(seed, Stream.NOISE, 1, layer_id)


def weight_values(seed, param_index, count):
    """Flat standard normal draws used for deterministic weight initialization."""
    key = _key(seed, Stream.WEIGHT, param_index)
    return gaussian_at(key, 0, 0, np.arange(count, dtype=np.int64))
