import json

import numpy as np
import pytest
from PIL import Image

from tamperloc import imageops
from tamperloc.data import (
    AugmentationPolicy,
    ManifestError,
    Sample,
    augment,
    generate_synthetic_dataset,
    load_manifest,
    load_sample,
    synthesize_tamper,
    write_manifest,
)
from tamperloc.rng import Rng


def write_png(path, arr):
    Image.fromarray(arr).save(path)


def make_dataset(tmp_path, n_auth=2, n_manip=2):
    lines = []
    for i in range(n_auth + n_manip):
        img = np.random.default_rng(i).integers(0, 255, size=(40, 40, 3), dtype=np.uint8)
        write_png(tmp_path / f"im{i}.png", img)
        entry = {"image_path": f"im{i}.png", "label": "authentic", "split": "train", "mask_path": None}
        if i >= n_auth:
            mask = np.zeros((40, 40), dtype=np.uint8)
            mask[5:15, 5:15] = 255
            write_png(tmp_path / f"m{i}.png", mask)
            entry.update(label="manipulated", mask_path=f"m{i}.png")
        lines.append(json.dumps(entry))
    p = tmp_path / "manifest.jsonl"
    p.write_text("\n".join(lines) + "\n")
    return p


def test_load_manifest_counts(tmp_path):
    m = load_manifest(make_dataset(tmp_path))
    assert len(m.entries) == 4
    assert m.counts() == {"train/authentic": 2, "train/manipulated": 2}


def test_manifest_missing_file_errors(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "nope.jsonl")


def test_manifest_missing_mask_errors(tmp_path):
    p = make_dataset(tmp_path)
    bad = p.read_text().replace('"m2.png"', '"gone.png"')
    p.write_text(bad)
    with pytest.raises(ManifestError, match="gone.png"):
        load_manifest(p)


def test_manipulated_without_mask_errors(tmp_path):
    p = make_dataset(tmp_path)
    lines = p.read_text().splitlines()
    obj = json.loads(lines[2])
    obj["mask_path"] = None
    lines[2] = json.dumps(obj)
    p.write_text("\n".join(lines))
    with pytest.raises(ManifestError, match=":3"):
        load_manifest(p)


def test_decode_mask_black_white(tmp_path):
    write_png(tmp_path / "b.png", np.zeros((8, 8), dtype=np.uint8))
    write_png(tmp_path / "w.png", np.full((8, 8), 255, dtype=np.uint8))
    assert not imageops.decode_mask(tmp_path / "b.png").any()
    assert imageops.decode_mask(tmp_path / "w.png").all()


def test_decode_mask_checkerboard(tmp_path):
    board = np.indices((8, 8)).sum(axis=0) % 2
    write_png(tmp_path / "c.png", (board * 255).astype(np.uint8))
    decoded = imageops.decode_mask(tmp_path / "c.png")
    assert np.array_equal(decoded[0], board.astype(bool))


def test_decode_unreadable_errors(tmp_path):
    (tmp_path / "junk.png").write_bytes(b"not a png")
    with pytest.raises(ValueError):
        imageops.decode_mask(tmp_path / "junk.png")


def test_authentic_sample_gets_zero_mask(tmp_path):
    m = load_manifest(make_dataset(tmp_path))
    s = load_sample(m, m.entries[0])
    assert not s.mask.any()
    assert s.image.dtype == np.float32 and s.image.max() <= 1.0


# -- synthetic tampering -----------------------------------------------------


def test_copy_move_mask_is_one_rectangle(textured_sample, rng):
    big = Sample(
        image=np.tile(textured_sample.image, (1, 2, 2)),
        mask=np.zeros((1, 128, 128), dtype=bool),
        source_id="big",
    )
    out = synthesize_tamper(big, "copy_move", rng)
    ys, xs = np.where(out.mask[0])
    rect = out.mask[0, ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
    assert rect.all()  # exactly one axis-aligned rectangle
    assert out.mask.sum() == rect.size


def test_copy_move_region_matches_source(textured_sample):
    rng = Rng(5)
    out = synthesize_tamper(textured_sample, "copy_move", rng)
    ys, xs = np.where(out.mask[0])
    region = out.image[:, ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
    # the cloned region must be bit-equal to some region of the original
    h, w = region.shape[1:]
    found = any(
        np.array_equal(region, textured_sample.image[:, y : y + h, x : x + w])
        for y in range(64 - h + 1)
        for x in range(64 - w + 1)
    )
    assert found


def test_inpaint_fixed_rect_mask_sum(textured_sample, rng):
    out = synthesize_tamper(textured_sample, "inpaint", rng, rect=(8, 8, 16, 16))
    assert out.mask.sum() == 256
    assert out.mask[0, 8:24, 8:24].all()


def test_splice_deterministic(textured_sample, rng):
    pool = [
        Sample(image=np.roll(textured_sample.image, 7, axis=2), mask=textured_sample.mask, source_id="other")
    ]
    a = synthesize_tamper(textured_sample, "splice", Rng(9), pool=pool)
    b = synthesize_tamper(textured_sample, "splice", Rng(9), pool=pool)
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.mask, b.mask)


def test_tamper_too_small_errors(rng):
    tiny = Sample(image=np.zeros((3, 16, 16), np.float32), mask=np.zeros((1, 16, 16), bool), source_id="t")
    with pytest.raises(ValueError, match="too small"):
        synthesize_tamper(tiny, "inpaint", rng)


# -- augmentation ------------------------------------------------------------


def test_identity_policy_is_identity(textured_sample, rng):
    out = augment(textured_sample, AugmentationPolicy(), rng)
    assert np.array_equal(out.image, textured_sample.image)
    assert np.array_equal(out.mask, textured_sample.mask)


def test_hflip_is_involution(textured_sample):
    policy = AugmentationPolicy(p_hflip=1.0)
    once = augment(textured_sample, policy, Rng(1))
    twice = augment(once, policy, Rng(1))
    assert np.array_equal(twice.image, textured_sample.image)
    assert np.array_equal(twice.mask, textured_sample.mask)


def test_rot90_swaps_rectangle_extents(textured_sample):
    s = textured_sample
    mask = np.zeros_like(s.mask)
    mask[0, 10:20, 30:50] = True  # 10 tall, 20 wide
    s = Sample(image=s.image, mask=mask, source_id=s.source_id)
    # find a seed drawing exactly one quarter turn
    for seed in range(50):
        rng = Rng(seed)
        out = augment(s, AugmentationPolicy(p_rotate90=1.0), rng)
        ys, xs = np.where(out.mask[0])
        hh, ww = ys.max() - ys.min() + 1, xs.max() - xs.min() + 1
        if (hh, ww) == (20, 10):
            expected = np.rot90(mask, 1, axes=(1, 2)) if np.array_equal(out.mask, np.rot90(mask, 1, axes=(1, 2))) else np.rot90(mask, 3, axes=(1, 2))
            assert np.array_equal(out.mask, expected)
            return
    pytest.fail("no single quarter-turn draw found")


def test_augment_preserves_binary_mask_and_shapes(textured_sample):
    from tamperloc.data import default_train_policy

    policy = default_train_policy()
    for seed in range(10):
        out = augment(textured_sample, policy, Rng(seed))
        assert out.mask.dtype == bool
        assert out.mask.shape == (1,) + out.image.shape[1:]
        assert np.isfinite(out.image).all()


# -- generator ---------------------------------------------------------------


def test_generator_manifest_round_trips(tmp_path):
    p = generate_synthetic_dataset(tmp_path / "d", n_images=6, seed=3, size=(64, 64))
    m = load_manifest(p)
    assert len(m.entries) == 6
    write_manifest(tmp_path / "copy.jsonl", m.entries)
    assert (tmp_path / "copy.jsonl").read_text() == p.read_text()


def test_generator_deterministic(tmp_path):
    p1 = generate_synthetic_dataset(tmp_path / "a", n_images=5, seed=42, size=(64, 64))
    p2 = generate_synthetic_dataset(tmp_path / "b", n_images=5, seed=42, size=(64, 64))
    assert p1.read_text() == p2.read_text()
    for f in sorted((tmp_path / "a" / "images").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / "images" / f.name).read_bytes()


def test_generator_masks_match_images(tmp_path):
    p = generate_synthetic_dataset(tmp_path / "d", n_images=6, seed=0, size=(64, 64))
    m = load_manifest(p)
    for e in m.entries:
        s = load_sample(m, e)
        if e.label == "manipulated":
            assert s.mask.any()
        else:
            assert not s.mask.any()
