"""All-MLP prediction head fusing the pyramid into stride-4 logits."""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import HeadConfig


def _norm(kind: str, channels: int) -> nn.Module:
    if kind == "none":
        return nn.Identity()
    if kind == "layer":
        from .pyramid import LayerNorm2d

        return LayerNorm2d(channels)
    if kind == "batch":
        return nn.BatchNorm2d(channels)
    raise ValueError(f"unknown norm kind {kind!r}")


class AllMLPHead(nn.Module):
    """Per-level 1x1 channel unifiers, bilinear upsampling to the finest
    level, channel concatenation, then a two-layer pointwise MLP to 1-channel
    logits. Probabilities are sigmoid(logits)."""

    def __init__(self, in_channels: int, num_levels: int, cfg: HeadConfig):
        super().__init__()
        self.cfg = cfg
        self.unify = nn.ModuleList(
            nn.Conv2d(in_channels, cfg.decoder_dim, kernel_size=1) for _ in range(num_levels)
        )
        self.fuse1 = nn.Conv2d(num_levels * cfg.decoder_dim, cfg.decoder_dim, kernel_size=1)
        self.norm = _norm(cfg.norm_kind, cfg.decoder_dim)
        self.act = nn.GELU()
        self.fuse2 = nn.Conv2d(cfg.decoder_dim, 1, kernel_size=1)
        # Start predictions near the expected tamper rate rather than 0.5.
        p = cfg.logit_prior
        nn.init.constant_(self.fuse2.bias, math.log(p / (1.0 - p)))

    def forward(self, maps: list[torch.Tensor]) -> torch.Tensor:
        if len(maps) != len(self.unify):
            raise ValueError(f"expected {len(self.unify)} pyramid maps, got {len(maps)}")
        target = maps[0].shape[-2:]  # the stride-4 map sets the output resolution
        feats = []
        for conv, m in zip(self.unify, maps):
            f = conv(m)
            if f.shape[-2:] != target:
                f = F.interpolate(f, size=target, mode="bilinear", align_corners=False)
            feats.append(f)
        x = torch.cat(feats, dim=1)
        x = self.fuse1(x)
        x = self.act(self.norm(x))
        return self.fuse2(x)  # (B, 1, H/4, W/4) logits


def upsample_full(logits: torch.Tensor, canvas: tuple[int, int]) -> torch.Tensor:
    """Bilinear interpolation of stride-4 logits to canvas resolution."""
    return F.interpolate(logits, size=canvas, mode="bilinear", align_corners=False)
