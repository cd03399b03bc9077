"""Training loop: AdamW with decoupled weight decay, linear warmup + cosine
decay, gradient accumulation to a fixed effective batch, early stopping.

Samples are forwarded one at a time and their losses weighted by
1/(accumulate * micro_batch), so any split of the same samples into
micro-batches accumulates the same gradient (up to float addition order) and
batch-norm statistics see identical singleton batches in every mode.

All epoch-level randomness (shuffle order, augmentation draws) is derived
statelessly from (seed, epoch, source_id); resuming from a checkpoint
therefore replays the exact run.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import morphology
from .checkpoint import load_tensors, load_pretrained, save_model
from .config import PipelineConfig, TrainConfig
from .data import AugmentationPolicy, DatasetManifest, augment, default_train_policy, load_sample
from .loss import combined_loss
from .metrics import evaluate_dataset
from .models import TamperNet
from .models.head import upsample_full
from .padding import PaddedSample, pad_to_canvas
from .rng import Rng

log = logging.getLogger(__name__)


def lr_schedule(epoch_fraction: float, cfg: TrainConfig) -> float:
    """Linear warmup to base_lr, then cosine decay to min_lr at the last epoch."""
    if epoch_fraction < cfg.warmup_epochs:
        return cfg.base_lr * epoch_fraction / cfg.warmup_epochs
    span = cfg.epochs - cfg.warmup_epochs
    progress = (epoch_fraction - cfg.warmup_epochs) / span if span > 0 else 1.0
    return cfg.min_lr + 0.5 * (cfg.base_lr - cfg.min_lr) * (1.0 + math.cos(math.pi * progress))


@dataclass
class TrainState:
    step: int = 0  # optimizer updates applied
    micro: int = 0  # micro-batches consumed since the last update
    epoch: int = 0
    best_f1: float = float("-inf")
    epochs_since_best: int = 0


class Trainer:
    def __init__(self, model: TamperNet, cfg: PipelineConfig):
        self.model = model
        self.cfg = cfg
        self.state = TrainState()
        self.optimizer = torch.optim.AdamW(
            model.parameters(),
            lr=cfg.train.base_lr,
            betas=cfg.train.betas,
            weight_decay=cfg.train.weight_decay,
        )
        self.epoch_fraction = 0.0
        self.last_loss: float | None = None

    # -- loss plumbing ------------------------------------------------------

    def sample_loss(self, padded: PaddedSample) -> torch.Tensor:
        image = torch.from_numpy(padded.image).unsqueeze(0)
        logits = self.model(image)
        prob = torch.sigmoid(upsample_full(logits, self.model.model_cfg.canvas))
        mask = torch.from_numpy(padded.mask.astype(np.float32)).unsqueeze(0)
        k = morphology.pick_k(padded.mask)
        band = morphology.edge_mask(padded.mask, k).data
        band_t = torch.from_numpy(band.astype(np.float32)).reshape(mask.shape)
        total, _, _ = combined_loss(prob, mask, band_t, self.cfg.loss)
        return total

    # -- stepping -----------------------------------------------------------

    def train_step(self, batch: list[PaddedSample]) -> bool:
        """Consume one micro-batch; apply an optimizer update every
        ``accumulate`` micro-batches. Returns True when an update was applied."""
        self.model.train()
        effective = self.cfg.train.accumulate * self.cfg.train.micro_batch
        batch_total = 0.0
        for padded in batch:
            loss = self.sample_loss(padded)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss {value} at step {self.state.step}, "
                    f"micro {self.state.micro}, sample {padded.source_id!r}"
                )
            (loss / effective).backward()
            batch_total += value
        self.last_loss = batch_total / max(len(batch), 1)
        self.state.micro += 1
        if self.state.micro >= self.cfg.train.accumulate:
            lr = lr_schedule(self.epoch_fraction, self.cfg.train)
            for group in self.optimizer.param_groups:
                group["lr"] = lr
            self.optimizer.step()
            self.optimizer.zero_grad(set_to_none=True)
            self.state.micro = 0
            self.state.step += 1
            return True
        return False

    # -- checkpointing ------------------------------------------------------

    def save(self, ckpt_dir: str | Path) -> None:
        save_model(ckpt_dir, self.model, meta={"config": self.cfg.to_dict()})
        torch.save(
            {"optimizer": self.optimizer.state_dict(), "state": vars(self.state)},
            Path(ckpt_dir) / "trainer_state.pt",
        )

    def restore(self, ckpt_dir: str | Path) -> None:
        _, tensors = load_tensors(ckpt_dir)
        load_pretrained(self.model, tensors, strict=True)
        extra = torch.load(Path(ckpt_dir) / "trainer_state.pt", weights_only=False)
        self.optimizer.load_state_dict(extra["optimizer"])
        self.state = TrainState(**extra["state"])


def fit(
    train_manifest: DatasetManifest,
    val_manifest: DatasetManifest,
    cfg: PipelineConfig,
    out_dir: str | Path,
    policy: AugmentationPolicy | None = None,
    val_split: str = "test",
    max_steps: int | None = None,
    resume_from: str | Path | None = None,
    init_weights: str | Path | None = None,
) -> Path:
    """Full training run; returns the path of the best checkpoint.

    The best checkpoint is the one with the highest validation F1 seen; the
    run stops early once ``early_stop_patience`` epochs pass without a new
    best.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.save(out_dir / "effective_config.json")

    train_entries = train_manifest.split("train")
    val_entries = val_manifest.split(val_split) or val_manifest.entries
    if not train_entries:
        raise ValueError("train split is empty")
    if not val_entries:
        raise ValueError("validation split is empty")

    rng = Rng(cfg.train.seed)
    torch.manual_seed(cfg.train.seed)
    model = TamperNet(cfg.model, cfg.head)
    if init_weights is not None:
        _, tensors = load_tensors(init_weights)
        report = load_pretrained(model, tensors)
        log.info("initialized from %s: %s", init_weights, report.summary())
    trainer = Trainer(model, cfg)
    if resume_from is not None:
        trainer.restore(resume_from)

    if policy is None:
        policy = default_train_policy()

    best_dir = out_dir / "best"
    last_dir = out_dir / "last"
    canvas = cfg.model.canvas
    n = len(train_entries)
    micro = cfg.train.micro_batch
    micros_per_epoch = math.ceil(n / micro)
    history = []
    stop = False

    for epoch in range(trainer.state.epoch, cfg.train.epochs):
        order = rng.derive("shuffle", epoch).np.permutation(n)
        for i in range(micros_per_epoch):
            idxs = order[i * micro : (i + 1) * micro]
            batch = []
            for j in idxs:
                entry = train_entries[int(j)]
                sample = load_sample(train_manifest, entry)
                sample = augment(sample, policy, rng.derive("aug", epoch, sample.source_id))
                batch.append(pad_to_canvas(sample, canvas))
            trainer.epoch_fraction = epoch + i / micros_per_epoch
            trainer.train_step(batch)
            if max_steps is not None and trainer.state.step >= max_steps:
                stop = True
                break

        report = evaluate_dataset(model, val_manifest, val_split, canvas) if val_manifest.split(val_split) else None
        if report is None:
            # fall back to evaluating whatever entries the manifest has
            from .metrics import aggregate, auc, f1_at_threshold, predict_sample

            per_image = []
            for entry in val_entries:
                s = load_sample(val_manifest, entry)
                prob, gt = predict_sample(model, s, canvas)
                per_image.append({"f1": f1_at_threshold(prob, gt), "auc": auc(prob, gt)})
            report = aggregate(per_image)

        improved = report.dataset_f1 > trainer.state.best_f1
        if improved:
            trainer.state.best_f1 = report.dataset_f1
            trainer.state.epochs_since_best = 0
            trainer.save(best_dir)
        else:
            trainer.state.epochs_since_best += 1
        trainer.state.epoch = epoch + 1
        trainer.save(last_dir)
        history.append(
            {"epoch": epoch, "val_f1": report.dataset_f1, "loss": trainer.last_loss, "step": trainer.state.step}
        )
        (out_dir / "history.json").write_text(json.dumps(history, indent=2) + "\n")
        log.info("epoch %d: val F1 %.4f (best %.4f), step %d", epoch, report.dataset_f1, trainer.state.best_f1, trainer.state.step)

        if stop or trainer.state.epochs_since_best >= cfg.train.early_stop_patience:
            break

    if not best_dir.exists():
        trainer.save(best_dir)
    return best_dir
