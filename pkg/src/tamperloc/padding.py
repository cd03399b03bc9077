"""Resolution-preserving canvas protocol.

Each image is placed unscaled at the top-left of a fixed zero canvas so the
model sees native-resolution content; only images whose longer side exceeds
the canvas are resized (aspect ratio kept) before placement. The inverse
crop restores predictions to the original geometry for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import imageops
from .data import Sample


@dataclass
class PaddedSample:
    image: np.ndarray  # (3, H, W) float32; zero outside the content rect
    mask: np.ndarray  # (1, H, W) bool; False outside the content rect
    content_h: int
    content_w: int
    orig_h: int
    orig_w: int
    source_id: str = ""


def pad_to_canvas(sample: Sample, canvas: tuple[int, int]) -> PaddedSample:
    H, W = canvas
    _, h, w = sample.image.shape
    if h <= 0 or w <= 0:
        raise ValueError(f"non-positive image dims {h}x{w}")

    image, mask = sample.image, sample.mask
    if h > H or w > W:
        scale = min(H / h, W / w)
        ch, cw = max(1, int(round(h * scale))), max(1, int(round(w * scale)))
        # longer side lands exactly on its canvas side
        if h * W >= w * H:
            ch = H
        else:
            cw = W
        image = imageops.resize_image(image, (ch, cw))
        mask = imageops.resize_mask(mask, (ch, cw))
    ch, cw = image.shape[1:]

    out_img = np.zeros((3, H, W), dtype=np.float32)
    out_img[:, :ch, :cw] = image
    out_mask = np.zeros((1, H, W), dtype=bool)
    out_mask[:, :ch, :cw] = mask
    return PaddedSample(
        image=out_img,
        mask=out_mask,
        content_h=ch,
        content_w=cw,
        orig_h=h,
        orig_w=w,
        source_id=sample.source_id,
    )


def crop_to_content(prediction: np.ndarray, padded: PaddedSample) -> np.ndarray:
    """Extract the content rectangle; undo any ingest resize."""
    if prediction.shape[1:] != padded.image.shape[1:]:
        raise ValueError(
            f"prediction {prediction.shape} does not match canvas {padded.image.shape[1:]}"
        )
    out = prediction[:, : padded.content_h, : padded.content_w]
    if (padded.content_h, padded.content_w) != (padded.orig_h, padded.orig_w):
        out = imageops.resize_image(out.astype(np.float32), (padded.orig_h, padded.orig_w))
    return out
