"""Dataset manifests, samples, augmentation, and a synthetic tamper generator.

The synthetic generator exists so the full train/eval pipeline can run from
nothing: it fabricates textured base images, applies rectangular copy-move /
splice / inpaint manipulations, and writes a JSON-lines manifest alongside
PNGs. No licensed forensic dataset is required.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import imageops
from .rng import Rng

LABELS = ("authentic", "manipulated")
SPLITS = ("train", "test")


class ManifestError(ValueError):
    pass


@dataclass
class ManifestEntry:
    image_path: str
    mask_path: str | None
    label: str
    split: str


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    root: Path

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[f"{e.split}/{e.label}"] = out.get(f"{e.split}/{e.label}", 0) + 1
        return out

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.root / p


@dataclass
class Sample:
    """An image with its binary ground-truth mask, pre-padding."""

    image: np.ndarray  # (3, h, w) float32 in [0, 1]
    mask: np.ndarray  # (1, h, w) bool
    source_id: str

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[0] != 3:
            raise ValueError(f"image must be (3, h, w), got {self.image.shape}")
        if self.mask.shape != (1,) + self.image.shape[1:]:
            raise ValueError(f"mask shape {self.mask.shape} does not match image {self.image.shape}")
        if self.mask.dtype != bool:
            raise ValueError("mask must be boolean")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    root = path.parent
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestError(f"{path}:{lineno}: invalid JSON: {e}") from e
        label = obj.get("label")
        if label not in LABELS:
            raise ManifestError(f"{path}:{lineno}: label must be one of {LABELS}, got {label!r}")
        if obj.get("split") not in SPLITS:
            raise ManifestError(f"{path}:{lineno}: split must be one of {SPLITS}")
        mask_path = obj.get("mask_path")
        if label == "manipulated" and not mask_path:
            raise ManifestError(f"{path}:{lineno}: manipulated entry has no mask_path")
        entry = ManifestEntry(obj["image_path"], mask_path, label, obj["split"])
        image_file = root / entry.image_path if not Path(entry.image_path).is_absolute() else Path(entry.image_path)
        if not image_file.is_file():
            raise ManifestError(f"{path}:{lineno}: image file missing: {image_file}")
        if mask_path:
            mask_file = root / mask_path if not Path(mask_path).is_absolute() else Path(mask_path)
            if not mask_file.is_file():
                raise ManifestError(f"{path}:{lineno}: mask file missing: {mask_file}")
        entries.append(entry)
    return DatasetManifest(entries=entries, root=root)


def write_manifest(path: str | Path, entries: list[ManifestEntry]) -> None:
    lines = [
        json.dumps(
            {"image_path": e.image_path, "mask_path": e.mask_path, "label": e.label, "split": e.split}
        )
        for e in entries
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_sample(manifest: DatasetManifest, entry: ManifestEntry) -> Sample:
    image = imageops.load_image(manifest.resolve(entry.image_path))
    if entry.mask_path:
        mask = imageops.decode_mask(manifest.resolve(entry.mask_path))
    else:
        mask = np.zeros((1,) + image.shape[1:], dtype=bool)
    if mask.shape[1:] != image.shape[1:]:
        raise ManifestError(
            f"{entry.image_path}: mask size {mask.shape[1:]} != image size {image.shape[1:]}"
        )
    return Sample(image=image, mask=mask, source_id=entry.image_path)


# ---------------------------------------------------------------------------
# synthetic tampering


def _random_rect(h: int, w: int, rng: Rng) -> tuple[int, int, int, int]:
    """(y0, x0, rh, rw) with sides between 1/8 and 1/2 of the image."""
    rh = int(rng.np.integers(max(4, h // 8), h // 2 + 1))
    rw = int(rng.np.integers(max(4, w // 8), w // 2 + 1))
    y0 = int(rng.np.integers(0, h - rh + 1))
    x0 = int(rng.np.integers(0, w - rw + 1))
    return y0, x0, rh, rw


def synthesize_tamper(
    base: Sample,
    kind: str,
    rng: Rng,
    pool: list[Sample] | None = None,
    rect: tuple[int, int, int, int] | None = None,
) -> Sample:
    """Alter a rectangle of ``base`` and return it with a matching mask.

    kinds: copy_move (clone a region from elsewhere in the same image),
    splice (paste from another pool image), inpaint (local mean + noise).
    ``rect`` pins the target rectangle (y0, x0, h, w) for tests.
    """
    _, h, w = base.image.shape
    if h < 32 or w < 32:
        raise ValueError(f"image too small to tamper: {h}x{w} (minimum 32x32)")
    if kind not in ("copy_move", "splice", "inpaint"):
        raise ValueError(f"unknown tamper kind {kind!r}")

    y0, x0, rh, rw = rect if rect is not None else _random_rect(h, w, rng)
    image = base.image.copy()

    if kind == "copy_move":
        sy = int(rng.np.integers(0, h - rh + 1))
        sx = int(rng.np.integers(0, w - rw + 1))
        image[:, y0 : y0 + rh, x0 : x0 + rw] = base.image[:, sy : sy + rh, sx : sx + rw]
    elif kind == "splice":
        donors = [s for s in (pool or []) if s.source_id != base.source_id]
        if not donors:
            raise ValueError("splice requires a pool with at least one other image")
        donor = donors[int(rng.np.integers(0, len(donors)))]
        dh, dw = donor.image.shape[1:]
        if dh < rh or dw < rw:
            rh, rw = min(rh, dh), min(rw, dw)
        sy = int(rng.np.integers(0, dh - rh + 1))
        sx = int(rng.np.integers(0, dw - rw + 1))
        image[:, y0 : y0 + rh, x0 : x0 + rw] = donor.image[:, sy : sy + rh, sx : sx + rw]
    else:  # inpaint
        region = base.image[:, y0 : y0 + rh, x0 : x0 + rw]
        mean = region.mean(axis=(1, 2), keepdims=True)
        noise = rng.np.normal(0.0, 0.02, size=region.shape).astype(np.float32)
        image[:, y0 : y0 + rh, x0 : x0 + rw] = np.clip(mean + noise, 0.0, 1.0)

    mask = np.zeros((1, h, w), dtype=bool)
    mask[0, y0 : y0 + rh, x0 : x0 + rw] = True
    return Sample(image=image, mask=mask, source_id=base.source_id)


# ---------------------------------------------------------------------------
# augmentation


@dataclass
class AugmentationPolicy:
    """Probabilities and ranges; the all-zero default is the identity."""

    p_hflip: float = 0.0
    p_vflip: float = 0.0
    p_rescale: float = 0.0
    rescale_range: tuple[float, float] = (0.75, 1.25)
    p_blur: float = 0.0
    blur_sigma: tuple[float, float] = (0.5, 2.0)
    p_rotate90: float = 0.0
    p_rotate_small: float = 0.0
    rotate_small_deg: float = 15.0
    p_tamper: float = 0.0
    tamper_kinds: tuple[str, ...] = ("copy_move", "inpaint")


def default_train_policy() -> AugmentationPolicy:
    return AugmentationPolicy(
        p_hflip=0.5,
        p_vflip=0.2,
        p_rescale=0.3,
        p_blur=0.2,
        p_rotate90=0.2,
        p_rotate_small=0.2,
        p_tamper=0.2,
    )


def _rotate_small(sample: Sample, angle: float) -> Sample:
    image = np.stack(
        [ndimage.rotate(c, angle, reshape=False, order=1, mode="constant", cval=0.0) for c in sample.image]
    ).astype(np.float32)
    mask = ndimage.rotate(
        sample.mask[0].astype(np.float32), angle, reshape=False, order=0, mode="constant", cval=0.0
    )
    return replace(sample, image=np.clip(image, 0.0, 1.0), mask=(mask > 0.5)[None])


def augment(sample: Sample, policy: AugmentationPolicy, rng: Rng) -> Sample:
    """Jointly transform image and mask; the mask stays strictly binary."""
    s = sample
    if policy.p_rescale > 0 and rng.np.random() < policy.p_rescale:
        scale = rng.np.uniform(*policy.rescale_range)
        h = max(32, int(round(s.image.shape[1] * scale)))
        w = max(32, int(round(s.image.shape[2] * scale)))
        s = replace(s, image=imageops.resize_image(s.image, (h, w)), mask=imageops.resize_mask(s.mask, (h, w)))
    if policy.p_hflip > 0 and rng.np.random() < policy.p_hflip:
        s = replace(s, image=s.image[:, :, ::-1].copy(), mask=s.mask[:, :, ::-1].copy())
    if policy.p_vflip > 0 and rng.np.random() < policy.p_vflip:
        s = replace(s, image=s.image[:, ::-1, :].copy(), mask=s.mask[:, ::-1, :].copy())
    if policy.p_rotate90 > 0 and rng.np.random() < policy.p_rotate90:
        turns = int(rng.np.integers(1, 4))
        s = replace(
            s,
            image=np.ascontiguousarray(np.rot90(s.image, turns, axes=(1, 2))),
            mask=np.ascontiguousarray(np.rot90(s.mask, turns, axes=(1, 2))),
        )
    if policy.p_rotate_small > 0 and rng.np.random() < policy.p_rotate_small:
        angle = rng.np.uniform(-policy.rotate_small_deg, policy.rotate_small_deg)
        s = _rotate_small(s, angle)
    if policy.p_blur > 0 and rng.np.random() < policy.p_blur:
        sigma = rng.np.uniform(*policy.blur_sigma)
        s = replace(s, image=imageops.gaussian_blur(s.image, sigma))
    if policy.p_tamper > 0 and rng.np.random() < policy.p_tamper:
        kind = policy.tamper_kinds[int(rng.np.integers(0, len(policy.tamper_kinds)))]
        if kind != "splice" and min(s.image.shape[1:]) >= 32:
            tampered = synthesize_tamper(s, kind, rng)
            s = replace(s, image=tampered.image, mask=s.mask | tampered.mask)
    return s


# ---------------------------------------------------------------------------
# synthetic dataset generation


def _textured_base(h: int, w: int, rng: Rng) -> np.ndarray:
    """A smooth color gradient plus band-limited noise; visually distinct per image."""
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    color0 = rng.np.uniform(0.1, 0.9, size=3)
    color1 = rng.np.uniform(0.1, 0.9, size=3)
    grad = color0[:, None, None] * (1 - xx) + color1[:, None, None] * yy
    noise = rng.np.normal(0, 1, size=(3, h, w))
    noise = imageops.gaussian_blur(noise.astype(np.float32), 1.5)
    noise = 0.15 * noise / (np.abs(noise).max() + 1e-8)
    return np.clip(grad + noise, 0.0, 1.0).astype(np.float32)


def generate_synthetic_dataset(
    out_dir: str | Path,
    n_images: int,
    seed: int,
    size: tuple[int, int] = (128, 128),
    split: str = "train",
    authentic_fraction: float = 0.25,
) -> Path:
    """Write images, masks, and a manifest.jsonl; returns the manifest path.

    Cycles through copy_move / splice / inpaint for the manipulated entries.
    Deterministic in (seed, n_images, size).
    """
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    root_rng = Rng(seed)

    bases = []
    for i in range(n_images):
        rng = root_rng.derive("base", i)
        img = _textured_base(size[0], size[1], rng)
        bases.append(Sample(image=img, mask=np.zeros((1,) + size, dtype=bool), source_id=f"img_{i:04d}"))

    kinds = ("copy_move", "splice", "inpaint")
    n_authentic = int(round(n_images * authentic_fraction))
    entries = []
    for i, base in enumerate(bases):
        name = f"img_{i:04d}"
        if i < n_authentic:
            imageops.save_image(out_dir / "images" / f"{name}.png", base.image)
            entries.append(ManifestEntry(f"images/{name}.png", None, "authentic", split))
            continue
        kind = kinds[(i - n_authentic) % len(kinds)]
        rng = root_rng.derive("tamper", i)
        tampered = synthesize_tamper(base, kind, rng, pool=bases)
        imageops.save_image(out_dir / "images" / f"{name}.png", tampered.image)
        imageops.save_mask(out_dir / "masks" / f"{name}.png", tampered.mask)
        entries.append(ManifestEntry(f"images/{name}.png", f"masks/{name}.png", "manipulated", split))

    manifest_path = out_dir / "manifest.jsonl"
    write_manifest(manifest_path, entries)
    return manifest_path
