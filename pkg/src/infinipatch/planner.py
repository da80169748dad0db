"""Tiling calculus: which z_l windows, noise windows and output rectangles make a region.

Coordinates live in per-layer global frames.  Along each axis a layer's
frame is an affine image of the z_S lattice: a job whose z_S window starts
at ``s`` sees layer pixels starting at ``2**exp * s + offset``.  Output
space is the final layer's frame shifted so a patch starts at
``stride * s``; regions are requested in output space.
"""

import json
import math
from dataclasses import asdict, dataclass

from . import texture
from .coords import GlobalIndex
from .structure import layer_names as structure_layer_names

FLOAT_BYTES = 4


@dataclass(frozen=True)
class Frame:
    """Placement of one layer's feature map relative to the z_S lattice."""
    exp: int
    offset: int
    size: int
    radius: int = 0

    def origin(self, s):
        return (2**self.exp) * s + self.offset


@dataclass(frozen=True)
class Geometry:
    patch: int
    zs_size: int
    zl_size: int
    stride: int
    pitch: int
    zs_margin: int  # per side, z_l to z_S


def geometry(cfg):
    zs = texture.backward_shape(cfg.patch_size, cfg.texture)
    stride = cfg.texture.stride
    pitch = (cfg.patch_size // stride) * stride
    if pitch < stride:
        raise ValueError(f"patch {cfg.patch_size} is smaller than the stride {stride}")
    margin = cfg.structure.margin
    return Geometry(cfg.patch_size, zs, zs + margin, stride, pitch, margin // 2)


def frames(cfg):
    """Per-layer frames: ``(conv_frames, noise_frames)``.

    ``conv_frames`` places each modulated convolution's raw output (before
    blur for up layers); fusion maps are sampled there.  ``noise_frames``
    places each noise layer's feature map.  Both include the z_l input as
    ``"zl"`` and the final output as ``"output"``.
    """
    g = geometry(cfg)
    k = cfg.structure.unfold_k
    r = (k - 1) // 2
    conv, noise = {}, {}
    conv["zl"] = noise["zl"] = Frame(0, -g.zs_margin, g.zl_size)
    off, size = -g.zs_margin, g.zl_size
    for name in structure_layer_names(cfg.structure):
        off, size = off + r, size - (k - 1)
        conv[name] = Frame(0, off, size, r)
    exp = 0
    for layer in texture.layers(cfg.texture):
        if layer.kind == "up":
            exp += 1
            off, size = 2 * off, 2 * size + 1
            conv[layer.name] = Frame(exp, off, size, 1)
            off, size = off + 2, size - 4
            noise[layer.name] = Frame(exp, off, size, 1)
        elif layer.kind == "conv":
            off, size = off + 1, size - 2
            conv[layer.name] = noise[layer.name] = Frame(exp, off, size, 1)
        else:
            conv[layer.name] = Frame(exp, off, size, 0)
    if size != g.patch:
        raise AssertionError(f"frame chain ends at {size}, expected patch {g.patch}")
    conv["output"] = noise["output"] = Frame(exp, off, size)
    return conv, noise


def output_offset(cfg):
    """Offset between the final layer frame and output space."""
    return frames(cfg)[0]["output"].offset


def to_output_space(frame, cfg, g):
    """Map layer-frame index ``g`` (array or scalar) to the output-space pixel its center aligns with."""
    geo = geometry(cfg)
    scale = geo.stride // 2**frame.exp
    return scale * (g - frame.offset) + (geo.patch - 1) / 2 - scale * (frame.size - 1) / 2


# -- jobs and plans ------------------------------------------------------------------

@dataclass(frozen=True)
class Job:
    index: int
    row: int
    col: int
    zs_origin: tuple
    zl_origin: tuple
    zl_size: int
    patch_origin: tuple
    out_rect: tuple  # (y, x, h, w) in output space
    crop: tuple  # (top, left, bottom, right) pixels discarded from the patch

    @property
    def coord_origin(self):
        return self.zl_origin


@dataclass(frozen=True)
class TilePlan:
    region: tuple
    patch: int
    pitch: int
    stride: int
    rows: int
    cols: int
    jobs: tuple

    def row_jobs(self, row):
        return self.jobs[row * self.cols : (row + 1) * self.cols]

    def to_dict(self, cfg=None):
        out = {
            "region": list(self.region),
            "patch": self.patch,
            "pitch": self.pitch,
            "stride": self.stride,
            "rows": self.rows,
            "cols": self.cols,
            "jobs": [],
        }
        for job in self.jobs:
            entry = asdict(job)
            for key, value in entry.items():
                if isinstance(value, tuple):
                    entry[key] = list(value)
            entry["coord_origin"] = list(job.coord_origin)
            if cfg is not None:
                entry["noise"] = [
                    {"layer": name, "layer_id": lid, "origin": list(origin), "size": size}
                    for name, lid, origin, size in noise_windows(job, cfg)
                ]
            out["jobs"].append(entry)
        return out

    def to_json(self, cfg=None, **kwargs):
        return json.dumps(self.to_dict(cfg), **kwargs)


def _axis_tiles(start, length, geo):
    first = start // geo.stride
    lead = start - geo.stride * first
    overlap = geo.patch - geo.pitch
    count = max(1, math.ceil((lead + length - overlap) / geo.pitch))
    tiles = []
    for j in range(count):
        s = first + j * (geo.pitch // geo.stride)
        u = geo.stride * s
        lo = max(start, u)
        hi = min(start + length, u + (geo.pitch if j < count - 1 else geo.patch))
        tiles.append((s, u, lo, hi))
    return tiles


def plan_region(region, cfg):
    """Cover output-space ``region = (y, x, h, w)`` with disjoint patch rectangles."""
    y, x, h, w = (int(v) for v in region)
    if h < 1 or w < 1:
        raise ValueError(f"region must be non-empty, got {h}x{w}")
    geo = geometry(cfg)
    if geo.pitch % geo.stride:
        raise AssertionError("pitch must be a multiple of the stride")
    ys = _axis_tiles(y, h, geo)
    xs = _axis_tiles(x, w, geo)
    jobs = []
    for r, (sy, uy, y0, y1) in enumerate(ys):
        for c, (sx, ux, x0, x1) in enumerate(xs):
            jobs.append(Job(
                index=len(jobs),
                row=r,
                col=c,
                zs_origin=(sy, sx),
                zl_origin=(sy - geo.zs_margin, sx - geo.zs_margin),
                zl_size=geo.zl_size,
                patch_origin=(uy, ux),
                out_rect=(y0, x0, y1 - y0, x1 - x0),
                crop=(y0 - uy, x0 - ux, uy + geo.patch - y1, ux + geo.patch - x1),
            ))
    return TilePlan((y, x, h, w), geo.patch, geo.pitch, geo.stride, len(ys), len(xs), tuple(jobs))


def single_job(zl_origin, cfg, index=0):
    """A job for an arbitrary z_l origin that keeps its whole patch."""
    geo = geometry(cfg)
    zs = (zl_origin[0] + geo.zs_margin, zl_origin[1] + geo.zs_margin)
    u = (geo.stride * zs[0], geo.stride * zs[1])
    return Job(index, 0, 0, zs, tuple(zl_origin), geo.zl_size, u,
               (u[0], u[1], geo.patch, geo.patch), (0, 0, 0, 0))


def layer_offsets(job, cfg):
    """Global origin and size of every layer's feature map for ``job``.

    Returns ``{name: (GlobalIndex, size)}`` over the conv frames, plus
    ``"<name>:noise"`` entries where the noise frame differs.
    """
    conv, noise = frames(cfg)
    sy, sx = job.zs_origin
    out = {}
    for name, fr in conv.items():
        out[name] = (GlobalIndex(fr.origin(sy), fr.origin(sx)), fr.size)
    for name, fr in noise.items():
        if fr != conv[name]:
            out[f"{name}:noise"] = (GlobalIndex(fr.origin(sy), fr.origin(sx)), fr.size)
    return out


def noise_windows(job, cfg):
    """``(layer name, layer_id, origin, size)`` for each noise layer of ``job``."""
    _, noise = frames(cfg)
    sy, sx = job.zs_origin
    return [
        (layer.name, layer.noise_id, GlobalIndex(noise[layer.name].origin(sy), noise[layer.name].origin(sx)),
         noise[layer.name].size)
        for layer in texture.noise_layers(cfg.texture)
    ]


# -- memory ------------------------------------------------------------------------------

def memory_profile(cfg, batch=1):
    """Live feature bytes after each hold/drop step of one job, in execution order."""
    geo = geometry(cfg)
    k = cfg.structure.unfold_k
    n = geo.zl_size
    live, steps = 0, []

    def hold(channels, size):
        nonlocal live
        live += batch * channels * size * size * FLOAT_BYTES
        steps.append(live)

    def drop(channels, size):
        nonlocal live
        live -= batch * channels * size * size * FLOAT_BYTES
        steps.append(live)

    hold(cfg.zl_dim, n)
    hold(3, n)
    c = cfg.zl_dim + 3
    hold(c, n)
    drop(cfg.zl_dim, n)
    drop(3, n)
    size = n
    for _ in range(cfg.structure.layers):
        hold(c * k * k, size - (k - 1))
        drop(c, size)
        size -= k - 1
        hold(cfg.structure.hidden, size)
        drop(c * k * k, size)
        c = cfg.structure.hidden
    for layer in texture.layers(cfg.texture):
        if layer.kind == "up":
            out_c = cfg.texture.channels[layer.block]
            hold(out_c, 2 * size + 1)
            drop(c, size)
            hold(out_c, 2 * size - 3)
            drop(out_c, 2 * size + 1)
            size = 2 * size - 3
            c = out_c
            hold(1, size)
            drop(1, size)
        elif layer.kind == "conv":
            hold(c, size - 2)
            drop(c, size)
            size -= 2
            hold(1, size)
            drop(1, size)
        else:
            hold(3, size)
            drop(c, size)
    return steps


def memory_bound(cfg, batch=1):
    """Peak live feature bytes of one job; a function of the config only."""
    return max(memory_profile(cfg, batch))


def band_bytes(plan):
    """Size of the largest row band buffer the streaming renderer allocates."""
    tallest = max(job.out_rect[2] for job in plan.jobs)
    return 3 * tallest * plan.region[3] * FLOAT_BYTES
