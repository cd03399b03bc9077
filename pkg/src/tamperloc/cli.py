"""Command-line entry points.

Exit codes: 0 success, 1 validation/input error, 2 runtime failure. Every
command that produces an output directory echoes its effective config there,
so a run is reproducible from its outputs alone.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import imageops, morphology
from .config import PipelineConfig, toy_pipeline_config
from .data import ManifestError, generate_synthetic_dataset, load_manifest
from .checkpoint import load_model
from .metrics import evaluate_dataset
from .padding import crop_to_content, pad_to_canvas
from .robustness import AttackSpec, RobustnessCurve, sweep
from .rng import seed_all
from .viz import overlay_prediction, plot_robustness_curve, visualize_feature_map

log = logging.getLogger(__name__)


def _load_config(config_path: str | None, overrides: tuple[str, ...], preset: str = "full") -> PipelineConfig:
    cfg = toy_pipeline_config() if preset == "toy" else PipelineConfig()
    if config_path:
        cfg = PipelineConfig.load(config_path)
    parsed = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"override must look like section.key=value, got {item!r}")
        parsed[key] = value
    return cfg.apply_overrides(parsed) if parsed else cfg


def _echo_config(cfg: PipelineConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.save(out_dir / "effective_config.json")


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def cli(verbose: bool):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format="%(message)s")


@cli.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--n", "n_images", default=16, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--size", default=128, show_default=True, help="Square image side in pixels.")
@click.option("--split", default="train", show_default=True, type=click.Choice(["train", "test"]))
@click.option("--authentic-fraction", default=0.25, show_default=True)
def synth(out_dir, n_images, seed, size, split, authentic_fraction):
    """Generate a self-contained synthetic tampered dataset + manifest."""
    manifest = generate_synthetic_dataset(
        out_dir, n_images, seed, size=(size, size), split=split, authentic_fraction=authentic_fraction
    )
    counts = load_manifest(manifest).counts()
    click.echo(f"wrote {manifest} ({counts})")


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--set", "overrides", multiple=True, help="Config override section.key=value.")
@click.option("--preset", default="full", type=click.Choice(["full", "toy"]), show_default=True)
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--val-manifest", "val_manifest_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--edge-lambda", type=float, help="Shortcut for --set loss.edge_lambda=...")
@click.option("--init-weights", type=click.Path(exists=True), help="Checkpoint dir for backbone init.")
@click.option("--resume", "resume_from", type=click.Path(exists=True))
@click.option("--max-steps", type=int)
def train(config_path, overrides, preset, manifest_path, val_manifest_path, out_dir, edge_lambda,
          init_weights, resume_from, max_steps):
    """Train on a manifest; tracks validation F1 and keeps the best checkpoint."""
    from .trainer import fit

    cfg = _load_config(config_path, overrides, preset)
    if edge_lambda is not None:
        cfg.loss.edge_lambda = edge_lambda
    seed_all(cfg.train.seed)
    train_manifest = load_manifest(manifest_path)
    val_manifest = load_manifest(val_manifest_path) if val_manifest_path else train_manifest
    best = fit(
        train_manifest,
        val_manifest,
        cfg,
        out_dir,
        max_steps=max_steps,
        resume_from=resume_from,
        init_weights=init_weights,
    )
    click.echo(f"best checkpoint: {best}")


@cli.command("eval")
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--split", default="test", show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
def eval_cmd(ckpt, manifest_path, split, report_path):
    """Evaluate pixel-level F1/AUC on a manifest split."""
    model, cfg = load_model(ckpt)
    manifest = load_manifest(manifest_path)
    entries = manifest.split(split)
    report = evaluate_dataset(model, manifest, split if entries else manifest.entries[0].split, cfg.model.canvas)
    report.save(report_path)
    click.echo(f"F1 {report.dataset_f1:.4f}  AUC {report.dataset_auc}  n={report.n_images} -> {report_path}")


@cli.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--threshold", default=0.5, show_default=True)
def predict(image_path, ckpt, out_dir, threshold):
    """Localize manipulation in one image; write probability map, binarized
    mask, overlay, and per-stage feature visualizations."""
    import torch

    from .data import Sample

    model, cfg = load_model(ckpt)
    out_dir = Path(out_dir)
    _echo_config(cfg, out_dir)

    image = imageops.load_image(image_path)
    sample = Sample(image=image, mask=np.zeros((1,) + image.shape[1:], dtype=bool), source_id=str(image_path))
    padded = pad_to_canvas(sample, cfg.model.canvas)
    model.eval()
    with torch.no_grad():
        t = torch.from_numpy(padded.image).unsqueeze(0)
        ge, maps, logits = model.forward_features(t)
        from .models.head import upsample_full

        prob_canvas = torch.sigmoid(upsample_full(logits, cfg.model.canvas))[0].numpy()
    prob = crop_to_content(prob_canvas, padded)

    imageops.save_image(out_dir / "probability.png", np.round(prob[0] * 255).astype(np.uint8))
    imageops.save_mask(out_dir / "mask.png", prob >= threshold)
    imageops.save_image(out_dir / "overlay.png", overlay_prediction(image, prob[0] >= threshold))
    imageops.save_image(out_dir / "vit_output.png", visualize_feature_map(ge[0].numpy()))
    for name, fm in zip(("sfpn_s4", "sfpn_s2", "sfpn_s1", "sfpn_s05", "sfpn_s025"), maps):
        imageops.save_image(out_dir / f"{name}.png", visualize_feature_map(fm[0].numpy()))
    click.echo(f"wrote predictions to {out_dir}")


@cli.command()
@click.option("--kind", required=True, type=click.Choice(["jpeg", "gaussian_blur"]))
@click.option("--levels", required=True, help="Comma-separated attack strengths.")
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--split", default="test", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def attack(kind, levels, ckpt, manifest_path, split, out_path):
    """Robustness sweep: degrade inputs at each level and re-evaluate F1."""
    spec = AttackSpec(kind, [float(x) for x in levels.split(",")])
    model, cfg = load_model(ckpt)
    manifest = load_manifest(manifest_path)
    if not manifest.split(split):
        split = manifest.entries[0].split
    curve = sweep(model, manifest, split, spec, cfg.model.canvas)
    curve.save(out_path)
    click.echo(f"baseline F1 {curve.baseline_f1:.4f}; wrote {out_path}")


@cli.command("edge-mask")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=None, help="Band radius; default scales with image size.")
@click.option("--out", "out_path", required=True, type=click.Path())
def edge_mask_cmd(in_path, k, out_path):
    """Compute the boundary band of a binary mask image."""
    mask = imageops.decode_mask(in_path)
    k = k if k is not None else morphology.pick_k(mask)
    band = morphology.edge_mask(mask, k)
    imageops.save_mask(out_path, band.data.reshape(mask.shape))
    click.echo(f"k={k}; wrote {out_path}")


@cli.command()
@click.option("--curve", "curve_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def viz(curve_path, out_path):
    """Render a robustness curve JSON as a plot image."""
    curve = RobustnessCurve.load(curve_path)
    plot_robustness_curve(curve, out_path)
    click.echo(f"wrote {out_path}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 2
    except (click.ClickException, ManifestError, ValueError, FileNotFoundError) as e:
        click.echo(f"error: {e}", err=True)
        return 1
    except Exception as e:  # noqa: BLE001
        click.echo(f"runtime failure: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
