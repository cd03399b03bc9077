"""Windowed ViT encoder producing a single stride-16 feature map.

Token grids are kept in (B, H', W', C) layout. Most blocks attend within
non-overlapping windows; the blocks listed in ``global_block_indexes``
attend over the full grid so information propagates across windows. The two
modes share the same projections, so a windowed block whose window covers
the whole grid computes exactly the global result.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config import ModelConfig


def window_partition(x: torch.Tensor, window: int):
    """Split a (B, H, W, C) grid into window tiles, zero-padding as needed.

    A window covering the whole grid passes it through as one unpadded tile,
    which keeps the windowed path identical to global attention in that case.
    Returns (tiles, (Hp, Wp)) where tiles is (B * nWindows, wh, ww, C).
    """
    B, H, W, C = x.shape
    if window >= H and window >= W:
        return x, (H, W)
    pad_h = (-H) % window
    pad_w = (-W) % window
    if pad_h or pad_w:
        x = F.pad(x, (0, 0, 0, pad_w, 0, pad_h))
    Hp, Wp = H + pad_h, W + pad_w
    x = x.view(B, Hp // window, window, Wp // window, window, C)
    tiles = x.permute(0, 1, 3, 2, 4, 5).reshape(-1, window, window, C)
    return tiles, (Hp, Wp)


def window_unpartition(tiles: torch.Tensor, window: int, pad_hw: tuple[int, int], hw: tuple[int, int]):
    """Inverse of :func:`window_partition`; crops any padding back off."""
    H, W = hw
    Hp, Wp = pad_hw
    if window >= H and window >= W:
        return tiles
    B = tiles.shape[0] // ((Hp // window) * (Wp // window))
    x = tiles.view(B, Hp // window, Wp // window, window, window, -1)
    x = x.permute(0, 1, 3, 2, 4, 5).reshape(B, Hp, Wp, -1)
    return x[:, :H, :W, :].contiguous()


class PatchEmbed(nn.Module):
    def __init__(self, patch_size: int, in_chans: int, embed_dim: int):
        super().__init__()
        self.proj = nn.Conv2d(in_chans, embed_dim, kernel_size=patch_size, stride=patch_size)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        _, _, H, W = x.shape
        p = self.proj.kernel_size[0]
        if H % p or W % p:
            raise ValueError(f"input {H}x{W} not divisible by patch size {p}")
        return self.proj(x).permute(0, 2, 3, 1)  # B, H', W', C


class Attention(nn.Module):
    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        if dim % num_heads:
            raise ValueError(f"dim {dim} not divisible by {num_heads} heads")
        self.num_heads = num_heads
        self.scale = (dim // num_heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (B, N, C) token sequence
        B, N, C = x.shape
        qkv = self.qkv(x).reshape(B, N, 3, self.num_heads, C // self.num_heads)
        q, k, v = qkv.permute(2, 0, 3, 1, 4).unbind(0)
        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(B, N, C)
        return self.proj(out)


class Mlp(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x):
        return self.fc2(self.act(self.fc1(x)))


class Block(nn.Module):
    """Pre-norm transformer block; window_size=0 means global attention."""

    def __init__(self, dim: int, num_heads: int, mlp_ratio: float, window_size: int):
        super().__init__()
        self.window_size = window_size
        self.norm1 = nn.LayerNorm(dim, eps=1e-6)
        self.attn = Attention(dim, num_heads)
        self.norm2 = nn.LayerNorm(dim, eps=1e-6)
        self.mlp = Mlp(dim, int(dim * mlp_ratio))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        B, H, W, C = x.shape
        shortcut = x
        x = self.norm1(x)
        ws = self.window_size if self.window_size > 0 else max(H, W)
        tiles, pad_hw = window_partition(x, ws)
        th, tw = tiles.shape[1], tiles.shape[2]
        tiles = self.attn(tiles.reshape(-1, th * tw, C)).reshape(-1, th, tw, C)
        x = window_unpartition(tiles, ws, pad_hw, (H, W))
        x = shortcut + x
        return x + self.mlp(self.norm2(x))


class ViTEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        gh, gw = cfg.grid
        self.patch_embed = PatchEmbed(cfg.patch_size, 3, cfg.embed_dim)
        self.pos_embed = nn.Parameter(torch.zeros(1, gh, gw, cfg.embed_dim))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        self.blocks = nn.ModuleList(
            Block(
                cfg.embed_dim,
                cfg.num_heads,
                cfg.mlp_ratio,
                window_size=0 if i in cfg.global_block_indexes else cfg.window_size,
            )
            for i in range(cfg.depth)
        )
        self.norm = nn.LayerNorm(cfg.embed_dim, eps=1e-6)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        """(B, 3, H, W) padded canvas -> (B, embed_dim, H/16, W/16)."""
        image = (image - self.cfg.image_mean) / self.cfg.image_std
        x = self.patch_embed(image)
        if x.shape[1:3] != self.pos_embed.shape[1:3]:
            raise ValueError(
                f"token grid {tuple(x.shape[1:3])} does not match configured canvas grid "
                f"{tuple(self.pos_embed.shape[1:3])}"
            )
        x = x + self.pos_embed
        for blk in self.blocks:
            x = blk(x)
        x = self.norm(x)
        return x.permute(0, 3, 1, 2).contiguous()


def resample_pos_embed(pos: torch.Tensor, grid: tuple[int, int]) -> torch.Tensor:
    """Bicubically resample a (1, gh, gw, C) positional embedding to a new grid."""
    if pos.shape[1:3] == tuple(grid):
        return pos
    x = pos.permute(0, 3, 1, 2)
    x = F.interpolate(x, size=grid, mode="bicubic", align_corners=True)
    return x.permute(0, 2, 3, 1).contiguous()
