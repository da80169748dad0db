"""Execute tile plans: run jobs on a worker pool and stitch patches row band by row band.

Jobs are consumed strictly in plan order from a bounded window of in-flight
batches, so the output never depends on the worker count, the executor
kind or the batch size.  Each lattice row of jobs is assembled into one band
buffer and flushed (to an in-memory canvas or a streaming writer) as soon as
its last job lands; only one band is alive at a time.
"""

import collections
import logging
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import planner, texture
from .coords import build_grid
from .errors import JobError, ShapeError
from .fields import local_spec, noise_spec, sample_global, sample_local_window, sample_noise_window
from .fusion import FusionMap
from .meter import NULL_METER
from .structure import forward_structure, mapping

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RenderRequest:
    """What to render.

    ``style`` is None (z_g drawn from ``seed``), an explicit z_g vector, or
    a :class:`FusionMap`.  ``executor`` is ``"process"`` or ``"thread"`` and
    only matters when ``workers > 1``.
    """
    region: tuple
    seed: int = 0
    style: object = None
    workers: int = 1
    batch_size: int = 1
    executor: str = "process"

    def __post_init__(self):
        if self.workers < 1 or self.batch_size < 1:
            raise ValueError("workers and batch_size must be >= 1")
        if self.executor not in ("process", "thread"):
            raise ValueError(f"unknown executor {self.executor!r}")


class Canvas:
    """Float RGB buffer that counts writes per pixel."""

    def __init__(self, height, width):
        self.data = np.zeros((3, height, width), dtype=np.float32)
        self.writes = np.zeros((height, width), dtype=np.uint16)

    def place(self, y, x, block):
        h, w = block.shape[-2:]
        self.data[:, y : y + h, x : x + w] = block
        self.writes[y : y + h, x : x + w] += 1

    def exactly_once(self):
        return bool(np.all(self.writes == 1))


@dataclass
class _Context:
    cfg: object
    weights: dict
    seed: int
    latent: object  # one mapped latent, or a list of K for fusion
    fusion: object = None


def make_context(req, weights, cfg):
    depth = cfg.mapping_depth
    if isinstance(req.style, FusionMap):
        latent = [mapping(weights, z, depth) for z in req.style.z_gs()]
        return _Context(cfg, weights, req.seed, latent, req.style)
    z_g = sample_global(req.seed, cfg.zg_dim) if req.style is None else np.asarray(req.style, np.float32)
    if z_g.shape != (cfg.zg_dim,):
        raise ShapeError(f"z_g must have {cfg.zg_dim} entries, got {z_g.shape}")
    return _Context(cfg, weights, req.seed, mapping(weights, z_g, depth))


def synthesize(jobs, ctx, meter=NULL_METER):
    """Full uncropped patches ``(N, 3, P, P)`` for a batch of jobs."""
    cfg = ctx.cfg
    n = cfg.zl_size
    zl = meter.hold(np.stack([
        sample_local_window(local_spec(ctx.seed, cfg.zl_dim), job.zl_origin, n, n) for job in jobs
    ]))
    planes = meter.hold(np.stack([
        build_grid(job.coord_origin, n, n, cfg.period, cfg.v_scale).planes for job in jobs
    ]))
    maps = ctx.fusion.job_maps(jobs) if ctx.fusion is not None else None
    zs = forward_structure(None, zl, planes, cfg.structure, ctx.weights, cfg.mapping_depth,
                           w_latent=ctx.latent, fusion=maps, meter=meter)
    windows = {job.index: {name: (lid, origin, size) for name, lid, origin, size in planner.noise_windows(job, cfg)}
               for job in jobs}

    def noise(name):
        return np.stack([
            sample_noise_window(noise_spec(ctx.seed, windows[job.index][name][0]),
                                windows[job.index][name][1], windows[job.index][name][2], windows[job.index][name][2])
            for job in jobs
        ])

    return texture.forward_texture(zs, ctx.latent, noise, cfg.texture, ctx.weights, fusion=maps, meter=meter)


def _guarded(jobs, ctx, meter=NULL_METER):
    try:
        return synthesize(jobs, ctx, meter)
    except Exception as exc:
        ids = jobs[0].index if len(jobs) == 1 else tuple(j.index for j in jobs)
        raise JobError(ids, exc) from exc


_WORKER_CTX = None


def _init_worker(ctx):
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _worker_batch(jobs):
    return _guarded(jobs, _WORKER_CTX)


def _run_batches(batches, ctx, req, meter):
    """Yield ``(batch, patches)`` in submission order."""
    if req.workers == 1:
        for batch in batches:
            yield batch, _guarded(batch, ctx, meter)
        return
    if req.executor == "thread":
        pool = ThreadPoolExecutor(req.workers)
        submit = lambda b: pool.submit(_guarded, b, ctx, meter)  # noqa: E731
    else:
        pool = ProcessPoolExecutor(req.workers, initializer=_init_worker, initargs=(ctx,))
        submit = lambda b: pool.submit(_worker_batch, b)  # noqa: E731
    with pool:
        pending = collections.deque()
        it = iter(batches)
        for batch in it:
            pending.append((batch, submit(batch)))
            if len(pending) >= req.workers:
                break
        while pending:
            batch, fut = pending.popleft()
            patches = fut.result()
            nxt = next(it, None)
            if nxt is not None:
                pending.append((nxt, submit(nxt)))
            yield batch, patches


def render(req, weights, cfg, sink=None, meter=NULL_METER):
    """Render ``req.region``.

    Returns the ``(3, h, w)`` canvas when ``sink`` is None; otherwise rows are
    streamed to ``sink`` (a writer from :mod:`imageio`, already given
    nothing) and None is returned.
    """
    plan = planner.plan_region(req.region, cfg)
    ctx = make_context(req, weights, cfg)
    ry, rx, rh, rw = plan.region
    canvas = Canvas(rh, rw) if sink is None else None
    if sink is not None:
        sink.begin(rh, rw)
    batches = [plan.jobs[i : i + req.batch_size] for i in range(0, len(plan.jobs), req.batch_size)]
    band, band_top, placed = None, 0, 0
    for batch, patches in _run_batches(batches, ctx, req, meter):
        for job, patch in zip(batch, patches):
            oy, ox, oh, ow = job.out_rect
            if band is None:
                band = Canvas(oh, rw)
                meter.hold(band.data)
                band_top, placed = oy - ry, 0
            top, left = job.crop[0], job.crop[1]
            band.place(0, ox - rx, patch[:, top : top + oh, left : left + ow])
            placed += 1
            if placed == plan.cols:
                if not band.exactly_once():
                    raise AssertionError(f"row band {job.row} is not covered exactly once")
                if canvas is not None:
                    canvas.place(band_top, 0, band.data)
                else:
                    sink.write_rows(band.data)
                meter.drop(band.data)
                band = None
        meter.drop(patches)
    if sink is not None:
        sink.close()
        return None
    if not canvas.exactly_once():
        bad = int(np.count_nonzero(canvas.writes != 1))
        raise AssertionError(f"{bad} canvas pixels were not written exactly once")
    return canvas.data


def render_fused(req, centers, weights, cfg, sink=None, meter=NULL_METER):
    fmap = FusionMap(centers, req.region, cfg)
    fused = RenderRequest(req.region, req.seed, fmap, req.workers, req.batch_size, req.executor)
    return render(fused, weights, cfg, sink, meter)


def bench(req, weights, cfg):
    """Time ``req`` against a serial run of the same request and compare the outputs."""
    serial_req = RenderRequest(req.region, req.seed, req.style, 1, req.batch_size, req.executor)
    t0 = time.perf_counter()
    serial = render(serial_req, weights, cfg)
    t_serial = time.perf_counter() - t0
    if req.workers == 1:
        return {"seconds_per_image": t_serial, "serial_seconds": t_serial, "speedup_vs_serial": 1.0,
                "identical": True, "jobs": len(planner.plan_region(req.region, cfg).jobs)}
    t0 = time.perf_counter()
    parallel = render(req, weights, cfg)
    t_par = time.perf_counter() - t0
    identical = serial.tobytes() == parallel.tobytes()
    log.info("bench: serial %.3fs, %d workers %.3fs", t_serial, req.workers, t_par)
    return {"seconds_per_image": t_par, "serial_seconds": t_serial, "speedup_vs_serial": t_serial / t_par,
            "identical": identical, "jobs": len(planner.plan_region(req.region, cfg).jobs)}
