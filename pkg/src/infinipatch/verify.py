"""Randomized seam checks: overlapping patches rendered independently must agree.

Each trial draws fresh weights (with non-zero noise strengths so the noise
fields matter), a field seed, a far-away z_l origin and a small lattice
offset, renders the two patches separately and compares their overlap in
output space.  The zero-padded twin is run on the same z_S windows and is
expected to disagree.
"""

from dataclasses import dataclass

import numpy as np

from . import planner, texture
from .fields import sample_noise_window, noise_spec
from .fusion import FusionMap, StyleCenter
from .runtime import RenderRequest, make_context, synthesize
from .coords import build_grid
from .fields import local_spec, sample_local_window
from .structure import forward_structure
from .weights import init_weights

ORIGIN_RANGE = 10**6


@dataclass(frozen=True)
class SeamTrial:
    offset: tuple
    overlap: tuple  # (h, w) of the compared region
    padfree_diff: float
    padded_diff: float


def noisy_weights(cfg, seed, rng):
    weights = init_weights(cfg, seed)
    for name in weights:
        if name.endswith(".noise_scale"):
            weights[name] = rng.normal(0.0, 0.5, weights[name].shape).astype(np.float32)
    return weights


def _overlap(origin_a, origin_b, size):
    lo = np.maximum(origin_a, origin_b)
    hi = np.minimum(np.add(origin_a, size), np.add(origin_b, size))
    return lo, hi


def _compare(pa, oa, pb, ob, size):
    lo, hi = _overlap(oa, ob, size)
    if np.any(hi <= lo):
        raise ValueError("patches do not overlap")
    a = pa[..., lo[0] - oa[0] : hi[0] - oa[0], lo[1] - oa[1] : hi[1] - oa[1]]
    b = pb[..., lo[0] - ob[0] : hi[0] - ob[0], lo[1] - ob[1] : hi[1] - ob[1]]
    return float(np.max(np.abs(a.astype(np.float64) - b.astype(np.float64)))), tuple(int(v) for v in hi - lo)


def padded_patch(job, ctx):
    """The zero-padded twin's patch for ``job``, fed the same z_S window as the padding-free stack."""
    cfg = ctx.cfg
    n = cfg.zl_size
    zl = sample_local_window(local_spec(ctx.seed, cfg.zl_dim), job.zl_origin, n, n)
    planes = build_grid(job.coord_origin, n, n, cfg.period, cfg.v_scale).planes
    zs = forward_structure(None, zl, planes, cfg.structure, ctx.weights, cfg.mapping_depth, w_latent=ctx.latent)
    size = zs.shape[-1]
    noise = {}
    for layer in texture.noise_layers(cfg.texture):
        scale = 2 ** (layer.block + 1)
        origin = (scale * job.zs_origin[0], scale * job.zs_origin[1])
        noise[layer.name] = sample_noise_window(noise_spec(ctx.seed, layer.noise_id), origin, scale * size, scale * size)
    return texture.forward_texture_padded(zs, ctx.latent, noise, cfg.texture, ctx.weights)


def random_offset(cfg, rng):
    reach = (cfg.patch_size - 1) // cfg.stride
    while True:
        d = tuple(int(v) for v in rng.integers(-reach, reach + 1, size=2))
        if d != (0, 0):
            return d


def seam_trial(cfg, rng, centers=0, padded=True):
    """One randomized trial; ``centers > 0`` renders with that many fused style centers."""
    weights = noisy_weights(cfg, int(rng.integers(0, 2**31)), rng)
    seed = int(rng.integers(0, 2**31))
    origin = tuple(int(v) for v in rng.integers(-ORIGIN_RANGE, ORIGIN_RANGE, size=2))
    offset = random_offset(cfg, rng)
    job_a = planner.single_job(origin, cfg, 0)
    job_b = planner.single_job((origin[0] + offset[0], origin[1] + offset[1]), cfg, 1)
    style = None
    if centers:
        u = np.array(job_a.patch_origin, dtype=np.float64)
        style = FusionMap(
            [StyleCenter(*(u + rng.uniform(-8, cfg.patch_size + 8, size=2)), seed=int(rng.integers(0, 2**31)))
             for _ in range(centers)],
            (0, 0, 1, 1), cfg)
    ctx = make_context(RenderRequest((0, 0, 1, 1), seed, style), weights, cfg)
    pa = synthesize([job_a], ctx)[0]
    pb = synthesize([job_b], ctx)[0]
    diff, overlap = _compare(pa, job_a.patch_origin, pb, job_b.patch_origin, cfg.patch_size)
    padded_diff = float("nan")
    if padded and not centers:
        qa, qb = padded_patch(job_a, ctx), padded_patch(job_b, ctx)
        scale = cfg.stride
        size = qa.shape[-1]
        oa = (scale * job_a.zs_origin[0], scale * job_a.zs_origin[1])
        ob = (scale * job_b.zs_origin[0], scale * job_b.zs_origin[1])
        padded_diff, _ = _compare(qa, oa, qb, ob, size)
    return SeamTrial(offset, overlap, diff, padded_diff)


def run_seam_suite(cfg, trials, seed=0, centers=0, padded=True):
    rng = np.random.default_rng(seed)
    return [seam_trial(cfg, rng, centers, padded) for _ in range(trials)]


def suite_passes(results, padded_threshold=1e-3):
    exact = all(r.padfree_diff == 0.0 for r in results)
    padded = [r.padded_diff for r in results if not np.isnan(r.padded_diff)]
    return exact and all(d > padded_threshold for d in padded)
