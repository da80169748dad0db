"""Parameter layout, deterministic initialization and the IFGW weight file.

IFGW layout (little-endian): magic ``b"IFGW"``, u32 version, u32 entry
count, then per entry: u16 name length, UTF-8 name, u8 ndim, u32 per dim,
float32 data in C order.
"""

import struct
from pathlib import Path

import numpy as np

from . import structure, texture
from .errors import CorruptHeaderError, TruncatedWeightFileError, WeightShapeMismatchError, WeightsNotFoundError
from .fields import weight_values
from .objectives import disc_param_shapes

MAGIC = b"IFGW"
VERSION = 1

# init kinds
NORMAL, ZEROS, ONES = "normal", "zeros", "ones"


def param_specs(cfg):
    """Ordered ``{name: (shape, init kind)}`` for generator and discriminator."""
    specs = {}
    d = cfg.zg_dim
    for i in range(cfg.mapping_depth):
        specs[f"mapping.{i}.weight"] = ((d, d), NORMAL)
        specs[f"mapping.{i}.bias"] = ((d,), ZEROS)

    def modulated(name, out_c, in_c, k, noise):
        specs[f"{name}.weight"] = ((out_c, in_c, k, k), NORMAL)
        specs[f"{name}.bias"] = ((out_c,), ZEROS)
        specs[f"{name}.style.weight"] = ((in_c, d), NORMAL)
        specs[f"{name}.style.bias"] = ((in_c,), ONES)
        if noise:
            specs[f"{name}.noise_scale"] = ((out_c,), ZEROS)

    sc = cfg.structure
    for i, name in enumerate(structure.layer_names(sc)):
        modulated(name, sc.hidden, structure.in_channels(sc, cfg.zl_dim, i), 1, False)
    c = sc.hidden
    for layer in texture.layers(cfg.texture):
        if layer.kind == "rgb":
            modulated(layer.name, 3, c, 1, False)
        else:
            out_c = cfg.texture.channels[layer.block]
            modulated(layer.name, out_c, c, texture.KERNEL, True)
            c = out_c
    for name, shape in disc_param_shapes(cfg.patch_size, cfg.discriminator).items():
        specs[name] = (shape, ZEROS if name.endswith(".bias") else NORMAL)
    return specs


def fan_in(shape):
    return int(np.prod(shape[1:]))


def init_weights(cfg, seed):
    """Fresh weights: N(0, 1/sqrt(fan_in)) for matrices and kernels, fixed values elsewhere."""
    weights = {}
    for index, (name, (shape, kind)) in enumerate(param_specs(cfg).items()):
        if kind == NORMAL:
            std = 1.0 / np.sqrt(fan_in(shape))
            values = weight_values(seed, index, int(np.prod(shape))) * std
            weights[name] = values.astype(np.float32).reshape(shape)
        elif kind == ONES:
            weights[name] = np.ones(shape, dtype=np.float32)
        else:
            weights[name] = np.zeros(shape, dtype=np.float32)
    return weights


def to_bytes(weights):
    parts = [MAGIC, struct.pack("<II", VERSION, len(weights))]
    for name, arr in weights.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def from_bytes(data):
    view = memoryview(data)
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(view):
            raise TruncatedWeightFileError(f"truncated while reading {what} at byte {pos}")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if len(view) < 12:
        raise TruncatedWeightFileError("truncated: file shorter than the 12-byte header")
    if bytes(view[:4]) != MAGIC:
        raise CorruptHeaderError(f"bad magic {bytes(view[:4])!r}, expected {MAGIC!r}")
    version, count = struct.unpack("<II", take(12, "header")[4:])
    if version != VERSION:
        raise CorruptHeaderError(f"unsupported weight file version {version}")
    weights = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2, "name length"))
        try:
            name = bytes(take(nlen, "name")).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptHeaderError(f"entry name is not UTF-8: {exc}") from exc
        if name in weights:
            raise CorruptHeaderError(f"duplicate entry {name!r}")
        (ndim,) = struct.unpack("<B", take(1, f"{name} ndim"))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim, f"{name} dims"))
        count_vals = int(np.prod(shape)) if ndim else 1
        buf = take(4 * count_vals, f"{name} data")
        weights[name] = np.frombuffer(buf, dtype="<f4").astype(np.float32).reshape(shape)
    if pos != len(view):
        raise CorruptHeaderError(f"{len(view) - pos} trailing bytes after the last entry")
    return weights


def check_against(weights, cfg):
    """Raise if ``weights`` does not have exactly the layout ``cfg`` needs."""
    specs = param_specs(cfg)
    for name, (shape, _) in specs.items():
        if name not in weights:
            raise WeightShapeMismatchError(name, shape, None)
        if tuple(weights[name].shape) != tuple(shape):
            raise WeightShapeMismatchError(name, tuple(shape), tuple(weights[name].shape))
    extra = [n for n in weights if n not in specs]
    if extra:
        raise WeightShapeMismatchError(extra[0], None, tuple(weights[extra[0]].shape))
    return weights


def save_weights(weights, path):
    Path(path).write_bytes(to_bytes(weights))


def load_weights(path, cfg=None):
    path = Path(path)
    if not path.exists():
        raise WeightsNotFoundError(f"weights not found: {path}")
    weights = from_bytes(path.read_bytes())
    if cfg is not None:
        check_against(weights, cfg)
    return weights
