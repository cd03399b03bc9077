"""Full localization network: encoder -> pyramid -> head."""

from __future__ import annotations

import torch
import torch.nn as nn

from ..config import HeadConfig, ModelConfig
from .head import AllMLPHead, upsample_full
from .pyramid import SimpleFeaturePyramid
from .vit import ViTEncoder


class TamperNet(nn.Module):
    def __init__(self, model_cfg: ModelConfig, head_cfg: HeadConfig):
        super().__init__()
        self.model_cfg = model_cfg
        self.head_cfg = head_cfg
        self.encoder = ViTEncoder(model_cfg)
        self.sfpn = SimpleFeaturePyramid(model_cfg)
        self.head = AllMLPHead(model_cfg.pyramid_channels, len(SimpleFeaturePyramid.STRIDES), head_cfg)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        """(B, 3, H, W) -> stride-4 logits (B, 1, H/4, W/4)."""
        return self.head(self.sfpn(self.encoder(image)))

    def forward_features(self, image: torch.Tensor):
        """Also expose the backbone map and pyramid levels, for visualization."""
        ge = self.encoder(image)
        maps = self.sfpn(ge)
        return ge, maps, self.head(maps)

    def predict_prob(self, image: torch.Tensor) -> torch.Tensor:
        """Full-resolution manipulation probabilities, (B, 1, H, W)."""
        logits = self.forward(image)
        return torch.sigmoid(upsample_full(logits, self.model_cfg.canvas))
