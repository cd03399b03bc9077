"""Simple feature pyramid: five independent branches over one backbone map.

Branches rescale the stride-16 backbone output to strides {4, 8, 16, 32, 64}
with stride-2 transpose convolutions (up) and stride-2 max pools (down), then
project to a common channel count with Conv(1x1) -> Conv(3x3). Channel-wise
layer normalization follows every convolution. There is no lateral fusion
across levels; fusing is the prediction head's job.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from ..config import ModelConfig


class LayerNorm2d(nn.Module):
    """LayerNorm over the channel axis of (B, C, H, W) at each location."""

    def __init__(self, channels: int, eps: float = 1e-6):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))
        self.eps = eps

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mu = x.mean(dim=1, keepdim=True)
        var = x.var(dim=1, keepdim=True, unbiased=False)
        x = (x - mu) / torch.sqrt(var + self.eps)
        return x * self.weight[:, None, None] + self.bias[:, None, None]


def _project(in_ch: int, out_ch: int) -> list[nn.Module]:
    return [
        nn.Conv2d(in_ch, out_ch, kernel_size=1),
        LayerNorm2d(out_ch),
        nn.Conv2d(out_ch, out_ch, kernel_size=3, padding=1),
        LayerNorm2d(out_ch),
    ]


class SimpleFeaturePyramid(nn.Module):
    STRIDES = (4, 8, 16, 32, 64)

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        dim, cs = cfg.embed_dim, cfg.pyramid_channels
        self.scale4 = nn.Sequential(
            nn.ConvTranspose2d(dim, dim // 2, kernel_size=2, stride=2),
            LayerNorm2d(dim // 2),
            nn.GELU(),
            nn.ConvTranspose2d(dim // 2, dim // 4, kernel_size=2, stride=2),
            LayerNorm2d(dim // 4),
            *_project(dim // 4, cs),
        )
        self.scale2 = nn.Sequential(
            nn.ConvTranspose2d(dim, dim // 2, kernel_size=2, stride=2),
            LayerNorm2d(dim // 2),
            *_project(dim // 2, cs),
        )
        self.scale1 = nn.Sequential(*_project(dim, cs))
        # max pooling cannot change channel count; the 1x1 conv does the projection
        self.scale05 = nn.Sequential(
            nn.MaxPool2d(kernel_size=2, stride=2),
            *_project(dim, cs),
        )
        self.scale025 = nn.Sequential(
            nn.MaxPool2d(kernel_size=2, stride=2),
            *_project(dim, cs),
            nn.MaxPool2d(kernel_size=2, stride=2),
        )

    def forward(self, ge: torch.Tensor) -> list[torch.Tensor]:
        """(B, embed_dim, H/16, W/16) -> five maps at strides 4..64."""
        return [self.scale4(ge), self.scale2(ge), self.scale1(ge), self.scale05(ge), self.scale025(ge)]
