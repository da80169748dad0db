"""Spatial style fusion: several z_g style centers blended across the canvas.

Every output pixel belongs to its nearest center (Euclidean, ties to the
lowest index).  For an intermediate layer, each feature pixel is mapped to
the output pixel its footprint is centred on, assigned the same way, and the
one-hot assignments are box-averaged over the layer's kernel radius.  The
weights are a pure function of global indices, so independently rendered
patches see identical maps wherever they overlap.
"""

from dataclasses import dataclass

import numpy as np

from . import planner
from .errors import ShapeError
from .fields import sample_global
from .structure import fused_modulated_conv  # noqa: F401  (re-exported)


@dataclass(frozen=True)
class StyleCenter:
    """A style anchored at output-space ``(y, x)``; z_g comes from ``seed`` unless ``vector`` is given."""
    y: float
    x: float
    seed: int = 0
    vector: object = None

    def z_g(self, dim):
        if self.vector is not None:
            v = np.asarray(self.vector, dtype=np.float32).reshape(-1)
            if v.shape[0] != dim:
                raise ShapeError(f"style vector has {v.shape[0]} entries, z_g needs {dim}")
            return v
        return sample_global(self.seed, dim)


class FusionMap:
    """Per-layer style weights over K centers for one config."""

    def __init__(self, centers, region, cfg):
        centers = list(centers)
        if not centers:
            raise ValueError("style fusion needs at least one center")
        pos = np.array([(c.y, c.x) for c in centers], dtype=np.float64)
        if not np.all(np.isfinite(pos)):
            raise ValueError("style center positions must be finite")
        self.centers = tuple(centers)
        self.positions = pos
        self.region = tuple(int(v) for v in region)
        self.cfg = cfg
        self.conv_frames, _ = planner.frames(cfg)

    @property
    def k(self):
        return len(self.centers)

    def z_gs(self):
        return [c.z_g(self.cfg.zg_dim) for c in self.centers]

    def assign(self, uy, ux):
        """Index of the nearest center for output-space coordinates (broadcastable arrays)."""
        uy = np.asarray(uy, dtype=np.float64)[..., None]
        ux = np.asarray(ux, dtype=np.float64)[..., None]
        d2 = (uy - self.positions[:, 0]) ** 2 + (ux - self.positions[:, 1]) ** 2
        return np.argmin(d2, axis=-1)

    def output_map(self):
        """One-hot ``(K, h, w)`` assignment over the requested output region."""
        y, x, h, w = self.region
        idx = self.assign(np.arange(y, y + h)[:, None], np.arange(x, x + w)[None, :])
        return _one_hot(idx, self.k).astype(np.float32)

    def layer_window(self, name, origin, size):
        """``(K, size, size)`` weights for layer ``name``'s conv frame starting at ``origin``."""
        fr = self.conv_frames[name]
        r = fr.radius
        gy = np.arange(origin[0] - r, origin[0] + size + r)
        gx = np.arange(origin[1] - r, origin[1] + size + r)
        uy = planner.to_output_space(fr, self.cfg, gy)
        ux = planner.to_output_space(fr, self.cfg, gx)
        onehot = _one_hot(self.assign(uy[:, None], ux[None, :]), self.k)
        if r == 0:
            return onehot.astype(np.float32)
        counts = _box_sum(onehot, 2 * r + 1)
        return (counts.astype(np.float32) / np.float32((2 * r + 1) ** 2)).astype(np.float32)

    def job_maps(self, jobs):
        """``{layer name: (N, K, size, size)}`` for every modulated layer of a batch of jobs."""
        out = {}
        for name, fr in self.conv_frames.items():
            if name in ("zl", "output"):
                continue
            out[name] = np.stack([
                self.layer_window(name, (fr.origin(job.zs_origin[0]), fr.origin(job.zs_origin[1])), fr.size)
                for job in jobs
            ])
        return out


def _one_hot(idx, k):
    return (idx[None, ...] == np.arange(k)[:, None, None]).astype(np.int64)


def _box_sum(a, width):
    """Sum over every ``width x width`` window along the last two axes (valid positions)."""
    c = np.cumsum(np.cumsum(a, axis=-2), axis=-1)
    c = np.pad(c, [(0, 0)] * (a.ndim - 2) + [(1, 0), (1, 0)])
    return c[..., width:, width:] - c[..., :-width, width:] - c[..., width:, :-width] + c[..., :-width, :-width]


def build_fusion_map(centers, region, cfg):
    return FusionMap(centers, region, cfg)
