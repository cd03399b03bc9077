"""Feature-map rendering and prediction overlays."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def visualize_feature_map(fm: np.ndarray) -> np.ndarray:
    """Channel-average rendering: per-pixel mean over channels, min-max
    normalized to [0, 255]. Constant maps render mid-gray (128)."""
    fm = np.asarray(fm, dtype=np.float64)
    if fm.ndim != 3:
        raise ValueError(f"expected (C, H, W), got {fm.shape}")
    mean = fm.mean(axis=0)
    lo, hi = mean.min(), mean.max()
    if hi == lo:
        return np.full(mean.shape, 128, dtype=np.uint8)
    scaled = (mean - lo) / (hi - lo) * 255.0
    return np.round(scaled).astype(np.uint8)


def overlay_prediction(image: np.ndarray, pred_mask: np.ndarray, alpha: float = 0.5) -> np.ndarray:
    """Blend red into predicted-manipulated pixels of a (3, h, w) image."""
    out = image.copy()
    m = np.asarray(pred_mask).reshape(image.shape[1:])
    red = np.array([1.0, 0.0, 0.0], dtype=np.float32)[:, None]
    out[:, m] = (1 - alpha) * out[:, m] + alpha * red
    return out


def plot_robustness_curve(curve, path: str | Path) -> None:
    """Render a level-vs-F1 curve with the all-positive baseline line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    levels = [p["level"] for p in curve.points]
    f1s = [p["dataset_f1"] for p in curve.points]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(levels, f1s, marker="o", label="model")
    ax.axhline(curve.baseline_f1, color="red", linestyle="--", label="all-positive baseline")
    ax.set_xlabel("JPEG quality" if curve.kind == "jpeg" else "blur sigma")
    ax.set_ylabel("pixel F1")
    ax.set_ylim(0, 1)
    if curve.kind == "jpeg":
        ax.invert_xaxis()
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
