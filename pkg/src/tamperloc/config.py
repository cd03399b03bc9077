"""Configuration dataclasses and their JSON round-trip."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class ModelConfig:
    """Backbone + pyramid architecture constants."""

    patch_size: int = 16
    embed_dim: int = 768
    depth: int = 12
    num_heads: int = 12
    window_size: int = 14
    global_block_indexes: tuple[int, ...] = (2, 5, 8, 11)
    canvas: tuple[int, int] = (1024, 1024)
    mlp_ratio: float = 4.0
    pyramid_channels: int = 256
    # Input normalization applied before the patch embedding; roughly whitens
    # images whose channels live in [0, 1].
    image_mean: float = 0.5
    image_std: float = 0.25

    def __post_init__(self):
        self.global_block_indexes = tuple(self.global_block_indexes)
        self.canvas = tuple(self.canvas)
        if self.canvas[0] % self.patch_size or self.canvas[1] % self.patch_size:
            raise ValueError(f"canvas {self.canvas} not divisible by patch size {self.patch_size}")
        if self.image_std <= 0:
            raise ValueError("image_std must be positive")
        if any(i < 0 or i >= self.depth for i in self.global_block_indexes):
            raise ValueError("global block index out of range")

    @property
    def grid(self) -> tuple[int, int]:
        return (self.canvas[0] // self.patch_size, self.canvas[1] // self.patch_size)


@dataclass
class HeadConfig:
    decoder_dim: int = 256
    norm_kind: str = "batch"  # {none, layer, batch}; batch scores best on average
    output_stride: int = 4
    # Prior probability of the positive (tampered) class; the final logit bias
    # is initialized to log(p / (1 - p)) so untrained predictions start near
    # the expected tamper rate instead of 0.5.
    logit_prior: float = 0.1

    def __post_init__(self):
        if self.norm_kind not in ("none", "layer", "batch"):
            raise ValueError(f"unknown norm_kind {self.norm_kind!r}")
        if not 0.0 < self.logit_prior < 1.0:
            raise ValueError("logit_prior must lie strictly between 0 and 1")


@dataclass
class LossConfig:
    edge_lambda: float = 20.0
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.edge_lambda < 0:
            raise ValueError("edge_lambda must be non-negative")


@dataclass
class TrainConfig:
    base_lr: float = 1e-4
    min_lr: float = 5e-7
    betas: tuple[float, float] = (0.9, 0.95)
    weight_decay: float = 0.05
    epochs: int = 200
    warmup_epochs: float = 4.0
    micro_batch: int = 1
    accumulate: int = 32
    early_stop_patience: int = 15
    seed: int = 0

    def __post_init__(self):
        self.betas = tuple(self.betas)
        if self.min_lr > self.base_lr:
            raise ValueError("min_lr must not exceed base_lr")
        if self.accumulate < 1:
            raise ValueError("accumulate must be >= 1")


def toy_model_config(**overrides) -> ModelConfig:
    """Small preset used throughout the tests; runs in seconds on CPU."""
    base = dict(
        patch_size=16,
        embed_dim=64,
        depth=4,
        num_heads=4,
        window_size=4,
        global_block_indexes=(1, 3),
        canvas=(128, 128),
        mlp_ratio=2.0,
        pyramid_channels=16,
    )
    base.update(overrides)
    return ModelConfig(**base)


def toy_head_config(**overrides) -> HeadConfig:
    base = dict(decoder_dim=16, norm_kind="batch", output_stride=4)
    base.update(overrides)
    return HeadConfig(**base)


_SECTIONS = {
    "model": ModelConfig,
    "head": HeadConfig,
    "loss": LossConfig,
    "train": TrainConfig,
}


@dataclass
class PipelineConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    head: HeadConfig = field(default_factory=HeadConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> dict:
        return {k: dataclasses.asdict(getattr(self, k)) for k in _SECTIONS}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        kwargs = {}
        for key, klass in _SECTIONS.items():
            section = dict(d.get(key, {}))
            known = {f.name for f in dataclasses.fields(klass)}
            unknown = set(section) - known
            if unknown:
                raise ValueError(f"unknown {key} config keys: {sorted(unknown)}")
            kwargs[key] = klass(**section)
        return cls(**kwargs)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def apply_overrides(self, overrides: dict[str, str]) -> "PipelineConfig":
        """Apply dotted key=value overrides, e.g. {"loss.edge_lambda": "5"}."""
        d = self.to_dict()
        for dotted, raw in overrides.items():
            section, _, key = dotted.partition(".")
            if section not in d or key not in d[section]:
                raise ValueError(f"unknown config key {dotted!r}")
            d[section][key] = json.loads(raw) if raw not in ("", None) else raw
        return PipelineConfig.from_dict(d)


def overfit_train_config(steps: int = 300, **overrides) -> TrainConfig:
    """Aggressive schedule for memorizing a handful of samples quickly.

    One "epoch" is a single optimizer step over all eight accumulated
    micro-batches; the cosine decay therefore spans exactly ``steps`` steps.
    """
    base = dict(
        base_lr=1e-2,
        min_lr=5e-7,
        weight_decay=0.05,
        epochs=steps,
        warmup_epochs=0.1 * steps,
        micro_batch=1,
        accumulate=8,
        early_stop_patience=steps,
    )
    base.update(overrides)
    return TrainConfig(**base)


def toy_pipeline_config(**train_overrides) -> PipelineConfig:
    return PipelineConfig(
        model=toy_model_config(),
        head=toy_head_config(),
        loss=LossConfig(),
        train=TrainConfig(**train_overrides) if train_overrides else TrainConfig(),
    )
