"""Combined segmentation + edge-weighted binary cross-entropy objective.

The edge term is BCE restricted to the boundary band of the ground-truth
mask (mean over band pixels only). Averaging the masked product globally
instead would count every off-band pixel as a confident correct zero and
dilute the term; the band-restricted mean keeps the emphasis on boundaries.
An empty band contributes zero, so authentic images remain well-defined.
"""

from __future__ import annotations

import torch

from .config import LossConfig


def bce(prob: torch.Tensor, target: torch.Tensor, weight_mask: torch.Tensor | None = None,
        epsilon: float = 1e-6) -> torch.Tensor:
    """Mean binary cross-entropy over all pixels, or over ``weight_mask`` only.

    Probabilities are clamped to [eps, 1-eps]; an empty weight mask yields 0.
    """
    if prob.shape != target.shape:
        raise ValueError(f"prob {tuple(prob.shape)} vs target {tuple(target.shape)} shape mismatch")
    if weight_mask is not None and weight_mask.shape != prob.shape:
        raise ValueError("weight mask shape mismatch")
    p = prob.clamp(epsilon, 1.0 - epsilon)
    t = target.to(p.dtype)
    pixel = -(t * torch.log(p) + (1.0 - t) * torch.log1p(-p))
    if weight_mask is None:
        return pixel.mean()
    w = weight_mask.to(p.dtype)
    denom = w.sum()
    if denom == 0:
        return pixel.sum() * 0.0  # keeps the graph alive with a true zero
    return (pixel * w).sum() / denom


def combined_loss(
    prob_full: torch.Tensor,
    mask_p: torch.Tensor,
    edge_band: torch.Tensor,
    cfg: LossConfig,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """total = seg + lambda * edge over the full canvas.

    ``prob_full`` is the upsampled head output; ``edge_band`` the boundary
    band of ``mask_p``, both at canvas resolution.
    """
    if mask_p.shape != prob_full.shape or edge_band.shape != prob_full.shape:
        raise ValueError("prob/mask/edge shapes must all match")
    seg = bce(prob_full, mask_p, epsilon=cfg.epsilon)
    edge = bce(prob_full, mask_p, weight_mask=edge_band, epsilon=cfg.epsilon)
    total = seg + cfg.edge_lambda * edge
    return total, seg, edge
