"""Seamless patch-wise synthesis of unbounded images from a padding-free generator."""

from .config import EngineConfig, PRESETS, load as load_config, preset
from .planner import TilePlan, memory_bound, plan_region
from .runtime import RenderRequest, bench, render, render_fused
from .weights import init_weights, load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "PRESETS",
    "RenderRequest",
    "TilePlan",
    "bench",
    "init_weights",
    "load_config",
    "load_weights",
    "memory_bound",
    "plan_region",
    "preset",
    "render",
    "render_fused",
    "save_weights",
]
