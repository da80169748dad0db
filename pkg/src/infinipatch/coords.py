"""Coordinate frames and the (tanh, cos, sin) positional encoding of z_l indices.

Horizontally the encoding repeats every ``period`` z_l columns; vertically it
saturates through ``tanh(i_y / v_scale)``.  The horizontal phase is computed
from ``i_x mod period`` in integer arithmetic, so periodicity is exact and
indices up to 2**40 in magnitude lose no precision.
"""

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_PERIOD = 64
DEFAULT_V_SCALE = 8.0
INDEX_LIMIT = 2**40


@dataclass(frozen=True)
class GlobalIndex:
    i_y: int
    i_x: int

    def __add__(self, other):
        return GlobalIndex(self.i_y + other[0], self.i_x + other[1])

    def __iter__(self):
        yield self.i_y
        yield self.i_x

    def __getitem__(self, k):
        return (self.i_y, self.i_x)[k]


@dataclass(frozen=True)
class CoordGrid:
    origin: GlobalIndex
    height: int
    width: int
    planes: np.ndarray  # (3, height, width) float32


def encode(idx, period=DEFAULT_PERIOD, v_scale=DEFAULT_V_SCALE):
    """Return ``(tanh(i_y / v_scale), cos(2 pi i_x / period), sin(2 pi i_x / period))``."""
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    i_y, i_x = idx
    phase = 2.0 * math.pi * ((int(i_x) % period) / period)
    return math.tanh(int(i_y) / v_scale), math.cos(phase), math.sin(phase)


def encode_arrays(i_y, i_x, period=DEFAULT_PERIOD, v_scale=DEFAULT_V_SCALE):
    i_y = np.asarray(i_y, dtype=np.int64)
    i_x = np.asarray(i_x, dtype=np.int64)
    phase = 2.0 * np.pi * (np.mod(i_x, period) / period)
    return np.tanh(i_y / v_scale), np.cos(phase), np.sin(phase)


def build_grid(origin, h, w, period=DEFAULT_PERIOD, v_scale=DEFAULT_V_SCALE):
    """Encoded coordinate planes for the ``h x w`` z_l window starting at ``origin``."""
    if h < 1 or w < 1:
        raise ValueError(f"grid size must be positive, got {h}x{w}")
    if period < 2:
        raise ValueError(f"period must be >= 2, got {period}")
    origin = GlobalIndex(int(origin[0]), int(origin[1]))
    rows = origin.i_y + np.arange(h, dtype=np.int64)
    cols = origin.i_x + np.arange(w, dtype=np.int64)
    ty, cx, sx = encode_arrays(rows, cols, period, v_scale)
    planes = np.empty((3, h, w), dtype=np.float32)
    planes[0] = ty.astype(np.float32)[:, None]
    planes[1] = cx.astype(np.float32)[None, :]
    planes[2] = sx.astype(np.float32)[None, :]
    return CoordGrid(origin, h, w, planes)
