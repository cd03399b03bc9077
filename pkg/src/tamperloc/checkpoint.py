"""Checkpoint format: a directory with an index.json plus one raw blob per tensor.

index.json carries a config echo and a tensor index {name: {shape, dtype,
file}}; blobs are little-endian raw arrays (float32 for parameters). Loading
into a model resamples the positional embedding bicubically when the token
grid differs and reports missing/unexpected tensors instead of failing
silently on them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .models.vit import resample_pos_embed

_DTYPES = {"float32": np.float32, "float64": np.float64, "int64": np.int64, "uint8": np.uint8}


def _safe_name(name: str) -> str:
    return name.replace("/", "_") + ".bin"


def save_tensors(ckpt_dir: str | Path, tensors: dict[str, torch.Tensor], meta: dict | None = None) -> None:
    ckpt_dir = Path(ckpt_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    index: dict = {"meta": meta or {}, "tensors": {}}
    for name, t in tensors.items():
        arr = t.detach().cpu().numpy()
        if str(arr.dtype) not in _DTYPES:
            raise ValueError(f"unsupported tensor dtype {arr.dtype} for {name}")
        fname = _safe_name(name)
        arr.astype(arr.dtype.newbyteorder("<")).tofile(ckpt_dir / fname)
        index["tensors"][name] = {"shape": list(arr.shape), "dtype": str(arr.dtype), "file": fname}
    (ckpt_dir / "index.json").write_text(json.dumps(index, indent=2) + "\n")


def load_tensors(ckpt_dir: str | Path) -> tuple[dict, dict[str, torch.Tensor]]:
    ckpt_dir = Path(ckpt_dir)
    index_path = ckpt_dir / "index.json"
    if not index_path.is_file():
        raise FileNotFoundError(f"not a checkpoint directory (no index.json): {ckpt_dir}")
    index = json.loads(index_path.read_text())
    tensors = {}
    for name, entry in index["tensors"].items():
        dtype = _DTYPES[entry["dtype"]]
        arr = np.fromfile(ckpt_dir / entry["file"], dtype=np.dtype(dtype).newbyteorder("<"))
        arr = arr.astype(dtype).reshape(entry["shape"])
        tensors[name] = torch.from_numpy(arr)
    return index.get("meta", {}), tensors


@dataclass
class LoadReport:
    loaded: list[str] = field(default_factory=list)
    resampled: list[str] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)
    unexpected: list[str] = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"loaded {len(self.loaded)} tensors"
            + (f", resampled {self.resampled}" if self.resampled else "")
            + (f", missing {self.missing}" if self.missing else "")
            + (f", ignored {self.unexpected}" if self.unexpected else "")
        )


def load_pretrained(model: torch.nn.Module, tensors: dict[str, torch.Tensor], strict: bool = False) -> LoadReport:
    """Copy matching tensors into the model; pos embeddings are resampled."""
    report = LoadReport()
    state = model.state_dict()
    new_state = {}
    for name, current in state.items():
        if name not in tensors:
            report.missing.append(name)
            continue
        src = tensors[name]
        if src.shape != current.shape:
            if name.endswith("pos_embed") and src.ndim == current.ndim == 4 and src.shape[-1] == current.shape[-1]:
                src = resample_pos_embed(src.float(), tuple(current.shape[1:3]))
                report.resampled.append(name)
            else:
                raise ValueError(f"shape mismatch for {name}: {tuple(src.shape)} vs {tuple(current.shape)}")
        new_state[name] = src.to(current.dtype)
        report.loaded.append(name)
    report.unexpected = sorted(set(tensors) - set(state))
    if strict and (report.missing or report.unexpected):
        raise ValueError(f"strict load failed: {report.summary()}")
    model.load_state_dict(new_state, strict=not report.missing)
    return report


def save_model(ckpt_dir: str | Path, model: torch.nn.Module, meta: dict | None = None) -> None:
    save_tensors(ckpt_dir, dict(model.state_dict()), meta=meta)


def load_model(ckpt_dir: str | Path):
    """Rebuild a model from a checkpoint's config echo and weights.

    Returns (model, PipelineConfig).
    """
    from .config import PipelineConfig
    from .models.net import TamperNet

    meta, tensors = load_tensors(ckpt_dir)
    if "config" not in meta:
        raise ValueError(f"checkpoint {ckpt_dir} has no config echo; cannot rebuild the model")
    cfg = PipelineConfig.from_dict(meta["config"])
    model = TamperNet(cfg.model, cfg.head)
    load_pretrained(model, tensors, strict=True)
    model.eval()
    return model, cfg
