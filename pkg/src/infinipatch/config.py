"""Engine configuration: presets, JSON round trip and geometry validation."""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import texture
from .errors import ConfigError, UnachievableSizeError
from .objectives import DiscriminatorConfig, LossWeights
from .structure import StructureConfig
from .texture import TextureConfig


@dataclass(frozen=True)
class EngineConfig:
    preset: str = "test"
    structure: StructureConfig = field(default_factory=StructureConfig)
    texture: TextureConfig = field(default_factory=TextureConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    loss_weights: LossWeights = field(default_factory=LossWeights)
    period: int = 64
    v_scale: float = 8.0
    zg_dim: int = 16
    zl_dim: int = 4
    mapping_depth: int = 2
    patch_size: int = 11

    @property
    def zs_size(self):
        return texture.backward_shape(self.patch_size, self.texture)

    @property
    def zl_size(self):
        return self.zs_size + self.structure.margin

    @property
    def stride(self):
        return self.texture.stride

    @property
    def pitch(self):
        return (self.patch_size // self.stride) * self.stride

    def next_resolution(self):
        """Output size one more up block would give (the real-image crop size)."""
        return texture.block_out(self.patch_size, self.texture)

    def validate(self):
        try:
            self.structure.validate()
            self.texture.validate()
            self.discriminator.validate()
            self.loss_weights.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.period < 2:
            raise ConfigError(f"period must be >= 2, got {self.period}")
        if self.v_scale <= 0:
            raise ConfigError("v_scale must be positive")
        if min(self.zg_dim, self.zl_dim, self.mapping_depth) < 1:
            raise ConfigError("latent dimensions and mapping depth must be positive")
        try:
            zs = self.zs_size
        except UnachievableSizeError as exc:
            raise ConfigError(f"patch size: {exc}") from exc
        sizes = texture.size_chain(zs, self.texture)
        if any(s % 2 == 0 for s in sizes) or self.zl_size % 2 == 0:
            raise ConfigError(f"feature sizes must all be odd, got z_l {self.zl_size} and chain {sizes}")
        if self.pitch % self.stride or self.pitch < self.stride:
            raise ConfigError(f"pitch {self.pitch} must be a positive multiple of stride {self.stride}")
        return self

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        d = self.to_dict()
        for sub in ("texture", "discriminator"):
            d[sub]["channels"] = list(d[sub]["channels"])
        return json.dumps(d, **kwargs)


PRESETS = {
    "test": EngineConfig(),
    "full": EngineConfig(
        preset="full",
        structure=StructureConfig(layers=4, unfold_k=3, hidden=256),
        texture=TextureConfig(up_blocks=4, convs_per_block=2, channels=(256, 128, 64, 32)),
        discriminator=DiscriminatorConfig(channels=(32, 64, 128, 256, 256)),
        zg_dim=512,
        zl_dim=64,
        mapping_depth=8,
        patch_size=101,
    ),
}

_NESTED = {
    "structure": StructureConfig,
    "texture": TextureConfig,
    "discriminator": DiscriminatorConfig,
    "loss_weights": LossWeights,
}


def preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def from_dict(d):
    """Expand ``d["preset"]`` and apply any explicit overrides on top of it."""
    d = dict(d)
    base = preset(d.pop("preset", "test"))
    changes = {}
    for key, value in d.items():
        if key in _NESTED:
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be an object")
            try:
                changes[key] = replace(getattr(base, key), **value)
            except TypeError as exc:
                raise ConfigError(f"bad field in {key}: {exc}") from exc
        elif key in EngineConfig.__dataclass_fields__:
            changes[key] = value
        else:
            raise ConfigError(f"unknown config field {key!r}")
    return replace(base, **changes).validate()


def loads(text):
    try:
        return from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def load(source):
    """A preset name or a path to a JSON config file."""
    if source in PRESETS:
        return PRESETS[source].validate()
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"config {source!r} is neither a preset nor an existing file")
    return loads(path.read_text())
