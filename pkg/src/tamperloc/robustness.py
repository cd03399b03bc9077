"""Robustness sweeps: degrade inputs, re-evaluate F1, compare to the
all-positive baseline (which depends only on ground truth, never the model)."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import imageops
from .data import DatasetManifest, Sample, load_sample
from .metrics import aggregate, all_positive_f1, auc, f1_at_threshold, predict_sample

ATTACK_KINDS = ("jpeg", "gaussian_blur")


@dataclass
class AttackSpec:
    kind: str
    levels: list[float]

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"attack kind must be one of {ATTACK_KINDS}, got {self.kind!r}")
        if not self.levels:
            raise ValueError("attack spec has no levels")
        for lv in self.levels:
            if self.kind == "jpeg" and not (1 <= lv <= 100 and float(lv).is_integer()):
                raise ValueError(f"JPEG quality must be an integer in [1, 100], got {lv}")
            if self.kind == "gaussian_blur" and lv <= 0:
                raise ValueError(f"blur sigma must be positive, got {lv}")


DEFAULT_JPEG = AttackSpec("jpeg", [100, 90, 80, 70, 60, 50])
DEFAULT_BLUR = AttackSpec("gaussian_blur", [0.5, 1.0, 2.0, 3.0, 4.0])


@dataclass
class RobustnessCurve:
    kind: str
    points: list[dict]  # {level, dataset_f1}
    baseline_f1: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "points": self.points, "baseline_f1": self.baseline_f1}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RobustnessCurve":
        d = json.loads(Path(path).read_text())
        return cls(kind=d["kind"], points=d["points"], baseline_f1=d["baseline_f1"])


def jpeg_roundtrip(image: np.ndarray, quality: int) -> np.ndarray:
    arr = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    buf = io.BytesIO()
    try:
        # keep chroma full-resolution at high quality; 4:2:0 alone leaves
        # ~17/255 error at sharp edges even at quality 100
        subsampling = 0 if quality >= 95 else -1
        Image.fromarray(arr).save(buf, format="JPEG", quality=int(quality), subsampling=subsampling)
        buf.seek(0)
        out = np.asarray(Image.open(buf).convert("RGB"), dtype=np.float32) / 255.0
    except OSError as e:
        raise RuntimeError(f"JPEG codec failure at quality {quality}: {e}") from e
    return np.ascontiguousarray(out.transpose(2, 0, 1))


def apply_attack(sample: Sample, kind: str, level: float) -> Sample:
    """Degrade the image; the ground-truth mask is never touched."""
    if kind == "jpeg":
        image = jpeg_roundtrip(sample.image, int(level))
    elif kind == "gaussian_blur":
        image = imageops.gaussian_blur(sample.image, float(level))
    else:
        raise ValueError(f"unknown attack kind {kind!r}")
    return replace(sample, image=image)


def sweep(
    model,
    manifest: DatasetManifest,
    split: str,
    spec: AttackSpec,
    canvas: tuple[int, int],
    threshold: float = 0.5,
) -> RobustnessCurve:
    entries = manifest.split(split)
    if not entries:
        raise ValueError(f"no entries in split {split!r}")
    samples = [load_sample(manifest, e) for e in entries]
    baseline = float(np.mean([all_positive_f1(s.mask) for s in samples]))

    points = []
    for level in spec.levels:
        per_image = []
        for s in samples:
            attacked = apply_attack(s, spec.kind, level)
            prob, gt = predict_sample(model, attacked, canvas)
            per_image.append({"f1": f1_at_threshold(prob, gt, threshold), "auc": auc(prob, gt)})
        points.append({"level": level, "dataset_f1": aggregate(per_image).dataset_f1})
    return RobustnessCurve(kind=spec.kind, points=points, baseline_f1=baseline)
