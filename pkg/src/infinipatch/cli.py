"""Command-line entry point: ``infinipatch <subcommand> [flags]``.

Exit status is 0 on success, 1 on runtime errors (with a one-line message
on stderr) and 2 on usage errors.
"""

import argparse
import logging
import re
import sys
from contextlib import contextmanager

from . import config as config_mod
from . import imageio, planner, runtime, verify, weights as weights_mod
from .errors import InfinipatchError
from .fusion import StyleCenter

log = logging.getLogger("infinipatch")

_REGION = re.compile(r"^(\d+)x(\d+)(?:([+-]\d+)([+-]\d+))?$")


def parse_region(text):
    """``HxW`` or ``HxW+OY+OX`` (offsets may be negative) to ``(y, x, h, w)``."""
    m = _REGION.match(text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"region must look like HxW+OY+OX, got {text!r}")
    h, w = int(m.group(1)), int(m.group(2))
    oy = int(m.group(3) or 0)
    ox = int(m.group(4) or 0)
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("region height and width must be positive")
    return (oy, ox, h, w)


def parse_center(text):
    """``x,y,seed`` in output pixels."""
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"center must be x,y,seed, got {text!r}")
    try:
        x, y, seed = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"center must be x,y,seed, got {text!r}") from None
    return StyleCenter(y=y, x=x, seed=seed)


def parse_workers(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"workers must be a comma-separated list, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("worker counts must be positive")
    return values


@contextmanager
def _output(path):
    if path == "-":
        yield sys.stdout.buffer
        sys.stdout.buffer.flush()
    else:
        try:
            f = open(path, "wb")
        except OSError as exc:
            raise InfinipatchError(f"cannot open output {path}: {exc}") from exc
        with f:
            yield f


def _format(args):
    if args.format:
        return args.format
    return "raw" if str(args.out).endswith(".raw") else "png"


def _render_args(p):
    p.add_argument("--config", default="test", help="preset name or JSON config file")
    p.add_argument("--weights", required=True, help="IFGW weight file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", type=parse_region, required=True, help="HxW+OY+OX in output pixels")
    p.add_argument("--out", required=True, help="output file, or - for stdout")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--executor", choices=("process", "thread"), default="process")
    p.add_argument("--format", choices=("png", "raw"), default=None,
                   help="defaults to raw for *.raw outputs, png otherwise")


def cmd_generate(args, centers=None):
    cfg = config_mod.load(args.config)
    weights = weights_mod.load_weights(args.weights, cfg)
    req = runtime.RenderRequest(args.region, args.seed, None, args.workers, args.batch, args.executor)
    with _output(args.out) as out:
        sink = imageio.writer_for(_format(args), out)
        if centers:
            runtime.render_fused(req, centers, weights, cfg, sink=sink)
        else:
            runtime.render(req, weights, cfg, sink=sink)
    log.info("wrote %dx%d image to %s", args.region[2], args.region[3], args.out)
    return 0


def cmd_fuse(args):
    return cmd_generate(args, args.center)


def cmd_plan(args):
    cfg = config_mod.load(args.config)
    plan = planner.plan_region(args.region, cfg)
    print(plan.to_json(cfg if args.noise else None, indent=2))
    return 0


def cmd_verify_seam(args):
    cfg = config_mod.load(args.config)
    results = verify.run_seam_suite(cfg, args.trials, args.seed, centers=args.centers)
    worst = max(r.padfree_diff for r in results)
    padded = [r.padded_diff for r in results if r.padded_diff == r.padded_diff]
    ok = verify.suite_passes(results)
    print(f"trials: {len(results)}")
    print(f"padding-free max abs diff: {worst:.3g}")
    if padded:
        print(f"zero-padded min of per-trial max abs diff: {min(padded):.3g}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_bench(args):
    cfg = config_mod.load(args.config)
    if args.weights:
        weights = weights_mod.load_weights(args.weights, cfg)
    else:
        weights = weights_mod.init_weights(cfg, args.seed)
    region = args.region or (0, 0, 8 * cfg.pitch, 8 * cfg.pitch)
    print(f"{'workers':>7}  {'batch':>5}  {'jobs':>5}  {'sec/image':>10}  {'speed-up':>8}  identical")
    for n in args.workers:
        req = runtime.RenderRequest(region, args.seed, None, n, args.batch, args.executor)
        r = runtime.bench(req, weights, cfg)
        print(f"{n:>7}  {args.batch:>5}  {r['jobs']:>5}  {r['seconds_per_image']:>10.3f}  "
              f"{r['speedup_vs_serial']:>7.2f}x  {'yes' if r['identical'] else 'NO'}")
    return 0


def cmd_init(args):
    cfg = config_mod.load(args.config)
    weights = weights_mod.init_weights(cfg, args.seed)
    weights_mod.save_weights(weights, args.out)
    log.info("wrote %d tensors to %s", len(weights), args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="infinipatch", description="Seamless patch-wise image synthesis.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="render a region to PNG or a raw float dump")
    _render_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fuse", help="render with several spatially placed styles")
    _render_args(p)
    p.add_argument("--center", type=parse_center, action="append", required=True,
                   help="x,y,seed of a style center; repeat for more centers")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("plan", help="print the tile plan for a region as JSON")
    p.add_argument("--config", default="test")
    p.add_argument("--region", type=parse_region, required=True)
    p.add_argument("--noise", action="store_true", help="include per-layer noise windows")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify-seam", help="randomized overlap test of independently rendered patches")
    p.add_argument("--config", default="test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--centers", type=int, default=0, help="render trials with this many fused styles")
    p.set_defaults(func=cmd_verify_seam)

    p = sub.add_parser("bench", help="time renders at several worker counts")
    p.add_argument("--config", default="test")
    p.add_argument("--weights", default=None, help="IFGW file; random weights from --seed if omitted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", type=parse_region, default=None)
    p.add_argument("--workers", type=parse_workers, default=[1, 2, 4])
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--executor", choices=("process", "thread"), default="process")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("init", help="write deterministic random weights")
    p.add_argument("--config", default="test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (InfinipatchError, ValueError, OSError) as exc:
        print(f"infinipatch: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
