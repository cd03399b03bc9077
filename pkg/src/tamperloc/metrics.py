"""Pixel-level F1 (fixed threshold 0.5) and rank-based AUC, per dataset.

Conventions: F1 on an authentic image is 1 for a clean prediction and 0
otherwise; AUC is undefined on single-class ground truth and excluded from
the dataset mean. Per-image scores are averaged, not pixel-pooled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from scipy.stats import rankdata

from .data import DatasetManifest, load_sample
from .padding import crop_to_content, pad_to_canvas


def f1_at_threshold(prob: np.ndarray, gt: np.ndarray, threshold: float = 0.5) -> float:
    if prob.shape != gt.shape:
        raise ValueError(f"prob {prob.shape} vs gt {gt.shape} shape mismatch")
    pred = prob >= threshold
    gt = gt.astype(bool)
    tp = int(np.sum(pred & gt))
    fp = int(np.sum(pred & ~gt))
    fn = int(np.sum(~pred & gt))
    if gt.sum() == 0:
        return 1.0 if fp == 0 else 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0


def auc(prob: np.ndarray, gt: np.ndarray) -> float | None:
    """Probability a random positive outranks a random negative, ties at 1/2.

    None when ground truth is single-class.
    """
    scores = np.asarray(prob, dtype=np.float64).ravel()
    labels = np.asarray(gt, dtype=bool).ravel()
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def all_positive_f1(gt: np.ndarray) -> float:
    """F1 of the predict-everything-manipulated baseline: 2*rho/(1+rho)."""
    rho = float(np.mean(np.asarray(gt, dtype=bool)))
    return 2.0 * rho / (1.0 + rho)


@dataclass
class MetricsReport:
    per_image: list[dict] = field(default_factory=list)
    dataset_f1: float = 0.0
    dataset_auc: float | None = None
    n_images: int = 0

    def to_dict(self) -> dict:
        return {
            "n_images": self.n_images,
            "f1": self.dataset_f1,
            "auc": self.dataset_auc,
            "per_image": self.per_image,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def aggregate(per_image: list[dict]) -> MetricsReport:
    f1s = [p["f1"] for p in per_image]
    aucs = [p["auc"] for p in per_image if p.get("auc") is not None]
    return MetricsReport(
        per_image=per_image,
        dataset_f1=float(np.mean(f1s)) if f1s else 0.0,
        dataset_auc=float(np.mean(aucs)) if aucs else None,
        n_images=len(per_image),
    )


def predict_sample(model, sample, canvas: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Run the full per-image protocol: pad, forward, upsample, crop.

    Returns (prob, gt) at the original image resolution.
    """
    padded = pad_to_canvas(sample, canvas)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        image = torch.from_numpy(padded.image).unsqueeze(0)
        prob = model.predict_prob(image)[0].numpy()
    if was_training:
        model.train()
    prob = crop_to_content(prob, padded)
    return prob, sample.mask


def evaluate_dataset(
    model,
    manifest: DatasetManifest,
    split: str,
    canvas: tuple[int, int],
    threshold: float = 0.5,
) -> MetricsReport:
    entries = manifest.split(split)
    if not entries:
        raise ValueError(f"no entries in split {split!r}")
    per_image = []
    for entry in entries:
        sample = load_sample(manifest, entry)
        prob, gt = predict_sample(model, sample, canvas)
        per_image.append(
            {
                "source_id": sample.source_id,
                "f1": f1_at_threshold(prob, gt, threshold),
                "auc": auc(prob, gt),
            }
        )
    return aggregate(per_image)
