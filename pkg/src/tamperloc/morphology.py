"""Binary morphology with a cross structuring element, and the edge-band mask.

The edge band is the absolute difference (XOR, for booleans) of the eroded
and dilated ground-truth mask. It straddles every manipulated/authentic
boundary symmetrically: complementing the mask leaves the band unchanged
away from the image border.

Out-of-bounds pixels are treated as authentic (False) for both operators,
matching the zero-padded canvas convention: an all-true mask therefore grows
an edge band along the image border.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StructuringElement:
    """Cross of radius k: the (2k+1)x(2k+1) grid with row k and column k set."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("structuring element radius must be >= 1")

    @property
    def grid(self) -> np.ndarray:
        g = np.zeros((2 * self.k + 1, 2 * self.k + 1), dtype=bool)
        g[self.k, :] = True
        g[:, self.k] = True
        return g

    @property
    def offsets(self) -> list[tuple[int, int]]:
        k = self.k
        offs = [(dy, 0) for dy in range(-k, k + 1)]
        offs += [(0, dx) for dx in range(-k, k + 1) if dx != 0]
        return offs


@dataclass(frozen=True)
class EdgeMask:
    data: np.ndarray  # bool, same shape as the input mask
    k: int


def _as_2d(mask: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    m = np.asarray(mask)
    if m.dtype != bool:
        raise ValueError(f"mask must be boolean, got {m.dtype}")
    shape = m.shape
    if m.ndim == 3 and m.shape[0] == 1:
        m = m[0]
    if m.ndim != 2:
        raise ValueError(f"mask must be (h, w) or (1, h, w), got {shape}")
    return m, shape


def _shift(m: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Shift with False fill: out[y, x] = m[y - dy, x - dx] where valid."""
    h, w = m.shape
    out = np.zeros_like(m)
    ys = slice(max(dy, 0), h + min(dy, 0))
    xs = slice(max(dx, 0), w + min(dx, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[ys, xs] = m[ys_src, xs_src]
    return out


def dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """True where any True input pixel lies under the reflected SE."""
    m, shape = _as_2d(mask)
    out = np.zeros_like(m)
    for dy, dx in se.offsets:
        out |= _shift(m, dy, dx)
    return out.reshape(shape)


def erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """True where every SE offset lands on a True pixel; borders erode."""
    m, shape = _as_2d(mask)
    out = np.ones_like(m)
    for dy, dx in se.offsets:
        out &= _shift(m, dy, dx)
    return out.reshape(shape)


def edge_mask(mask: np.ndarray, k: int) -> EdgeMask:
    """Boundary band |erode - dilate| of radius k around every mask edge."""
    if k < 1:
        raise ValueError("edge band radius k must be >= 1")
    se = StructuringElement(k)
    band = dilate(mask, se) ^ erode(mask, se)
    return EdgeMask(data=band, k=k)


def pick_k(mask: np.ndarray) -> int:
    """Band radius scaled to image size: 5 at a 1024-pixel longer side."""
    m, _ = _as_2d(mask)
    h, w = m.shape
    return max(1, round(5 * max(h, w) / 1024))
