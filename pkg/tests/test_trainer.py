import copy
import math

import numpy as np
import pytest
import torch

from tamperloc.config import TrainConfig, toy_pipeline_config
from tamperloc.data import generate_synthetic_dataset, load_manifest, load_sample
from tamperloc.models import TamperNet
from tamperloc.padding import pad_to_canvas
from tamperloc.trainer import Trainer, fit, lr_schedule


def test_schedule_warmup_end_is_base_lr():
    cfg = TrainConfig()
    assert lr_schedule(cfg.warmup_epochs, cfg) == cfg.base_lr == 1e-4


def test_schedule_final_epoch_is_min_lr():
    cfg = TrainConfig()
    assert abs(lr_schedule(cfg.epochs, cfg) - 5e-7) < 1e-18


def test_schedule_midpoint():
    cfg = TrainConfig()
    mid = cfg.warmup_epochs + (cfg.epochs - cfg.warmup_epochs) / 2
    assert abs(lr_schedule(mid, cfg) - (cfg.base_lr + cfg.min_lr) / 2) < 1e-18


def test_schedule_continuous_at_junction():
    cfg = TrainConfig()
    eps = 1e-9
    below = lr_schedule(cfg.warmup_epochs - eps, cfg)
    above = lr_schedule(cfg.warmup_epochs + eps, cfg)
    assert abs(below - above) < 1e-10
    assert lr_schedule(0.0, cfg) == 0.0


def _padded_samples(n, canvas, seed=0):
    from tamperloc.data import Sample, _textured_base, synthesize_tamper
    from tamperloc.rng import Rng

    rng = Rng(seed)
    out = []
    for i in range(n):
        base = Sample(
            image=_textured_base(canvas[0], canvas[1], rng.derive("b", i)),
            mask=np.zeros((1,) + canvas, dtype=bool),
            source_id=f"s{i}",
        )
        s = synthesize_tamper(base, "inpaint", rng.derive("t", i))
        out.append(pad_to_canvas(s, canvas))
    return out


def _make_trainer(accumulate, micro_batch, norm_kind="layer", lr=1e-3):
    cfg = toy_pipeline_config()
    cfg.head.norm_kind = norm_kind
    cfg.train.accumulate = accumulate
    cfg.train.micro_batch = micro_batch
    cfg.train.base_lr = lr
    cfg.train.warmup_epochs = 0.0
    torch.manual_seed(123)
    model = TamperNet(cfg.model, cfg.head)
    t = Trainer(model, cfg)
    t.epoch_fraction = cfg.train.epochs / 2  # some mid-schedule lr
    return t


def test_accumulation_equivalence():
    samples = _padded_samples(4, (128, 128))
    joint = _make_trainer(accumulate=1, micro_batch=4)
    split = _make_trainer(accumulate=4, micro_batch=1)
    split.model.load_state_dict(copy.deepcopy(joint.model.state_dict()))
    split.epoch_fraction = joint.epoch_fraction

    assert joint.train_step(samples) is True
    updated = False
    for s in samples:
        updated = split.train_step([s])
    assert updated is True

    for (name, a), (_, b) in zip(joint.model.named_parameters(), split.model.named_parameters()):
        assert (a - b).abs().max() < 1e-6, name


def test_zero_lr_step_leaves_parameters_bit_identical():
    t = _make_trainer(accumulate=1, micro_batch=1, lr=0.0)
    t.cfg.train.min_lr = 0.0
    before = {n: p.clone() for n, p in t.model.named_parameters()}
    t.train_step(_padded_samples(1, (128, 128)))
    for n, p in t.model.named_parameters():
        assert torch.equal(p, before[n]), n


def test_single_step_decreases_loss():
    samples = _padded_samples(2, (128, 128))
    t = _make_trainer(accumulate=1, micro_batch=2, lr=1e-4)
    with torch.no_grad():
        before = sum(float(t.sample_loss(s)) for s in samples)
    t.train_step(samples)
    with torch.no_grad():
        after = sum(float(t.sample_loss(s)) for s in samples)
    assert after < before


def test_non_finite_loss_aborts():
    t = _make_trainer(accumulate=1, micro_batch=1)
    with torch.no_grad():
        t.model.head.fuse2.bias.fill_(float("nan"))
    with pytest.raises(RuntimeError, match="non-finite"):
        t.train_step(_padded_samples(1, (128, 128)))


@pytest.fixture(scope="module")
def tiny_manifests(tmp_path_factory):
    root = tmp_path_factory.mktemp("fitdata")
    train = load_manifest(generate_synthetic_dataset(root / "train", 4, seed=7, size=(128, 128)))
    val = load_manifest(generate_synthetic_dataset(root / "val", 3, seed=8, size=(128, 128), split="test"))
    return train, val


def _fit_cfg(epochs=2, patience=100):
    cfg = toy_pipeline_config()
    cfg.train.epochs = epochs
    cfg.train.warmup_epochs = 1.0
    cfg.train.accumulate = 1
    cfg.train.early_stop_patience = patience
    cfg.train.base_lr = 1e-3
    return cfg


def test_patience_zero_stops_after_one_evaluation(tmp_path, tiny_manifests):
    train, val = tiny_manifests
    cfg = _fit_cfg(epochs=50, patience=0)
    fit(train, val, cfg, tmp_path / "run", val_split="test")
    import json

    history = json.loads((tmp_path / "run" / "history.json").read_text())
    assert len(history) == 1


def test_empty_split_errors(tmp_path, tiny_manifests):
    train, val = tiny_manifests
    cfg = _fit_cfg()
    with pytest.raises(ValueError, match="train split"):
        fit(val, val, cfg, tmp_path / "x")  # val manifest has no train split


def _checkpoint_bytes(ckpt_dir):
    blobs = {}
    for f in sorted(ckpt_dir.glob("*.bin")):
        blobs[f.name] = f.read_bytes()
    return blobs


def test_resume_matches_uninterrupted_run(tmp_path, tiny_manifests):
    train, val = tiny_manifests
    # uninterrupted: 4 epochs
    cfg_a = _fit_cfg(epochs=4)
    fit(train, val, cfg_a, tmp_path / "a", val_split="test")
    # interrupted at the end of epoch 2 (4 samples -> 4 steps/epoch), then resumed
    cfg_b = _fit_cfg(epochs=4)
    fit(train, val, cfg_b, tmp_path / "b", val_split="test", max_steps=8)
    cfg_b2 = _fit_cfg(epochs=4)
    fit(train, val, cfg_b2, tmp_path / "b2", val_split="test", resume_from=tmp_path / "b" / "last")
    a = _checkpoint_bytes(tmp_path / "a" / "last")
    b = _checkpoint_bytes(tmp_path / "b2" / "last")
    assert a.keys() == b.keys()
    for name in a:
        assert a[name] == b[name], name


def test_fixed_seed_runs_are_identical(tmp_path, tiny_manifests):
    train, val = tiny_manifests
    fit(train, val, _fit_cfg(epochs=2), tmp_path / "r1", val_split="test")
    fit(train, val, _fit_cfg(epochs=2), tmp_path / "r2", val_split="test")
    import json

    h1 = json.loads((tmp_path / "r1" / "history.json").read_text())
    h2 = json.loads((tmp_path / "r2" / "history.json").read_text())
    assert h1 == h2
    a = _checkpoint_bytes(tmp_path / "r1" / "last")
    b = _checkpoint_bytes(tmp_path / "r2" / "last")
    for name in a:
        assert a[name] == b[name], name


def test_best_checkpoint_tracks_best_f1(tmp_path, tiny_manifests):
    train, val = tiny_manifests
    out = tmp_path / "run"
    fit(train, val, _fit_cfg(epochs=3), out, val_split="test")
    import json

    history = json.loads((out / "history.json").read_text())
    best_seen = max(h["val_f1"] for h in history)
    state = torch.load(out / "best" / "trainer_state.pt", weights_only=False)
    assert state["state"]["best_f1"] == best_seen
