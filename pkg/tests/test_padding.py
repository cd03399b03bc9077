import numpy as np
import pytest

from tamperloc.data import Sample
from tamperloc.padding import crop_to_content, pad_to_canvas


def make_sample(h, w, seed=0):
    rng = np.random.default_rng(seed)
    img = rng.random((3, h, w)).astype(np.float32)
    mask = rng.random((1, h, w)) < 0.3
    return Sample(image=img, mask=mask, source_id=f"s{h}x{w}")


def test_top_left_placement_640x480():
    s = make_sample(640, 480)
    p = pad_to_canvas(s, (1024, 1024))
    assert (p.content_h, p.content_w) == (640, 480)
    assert np.array_equal(p.image[:, :640, :480], s.image)
    assert np.array_equal(p.mask[:, :640, :480], s.mask)
    # pad region purity
    assert not p.image[:, 640:, :].any() and not p.image[:, :, 480:].any()
    assert not p.mask[:, 640:, :].any() and not p.mask[:, :, 480:].any()


def test_identity_padding_at_canvas_size():
    s = make_sample(1024, 1024)
    p = pad_to_canvas(s, (1024, 1024))
    assert p.content_h == p.content_w == 1024
    assert np.array_equal(p.image, s.image)


def test_oversize_resized_preserving_aspect():
    s = make_sample(2048, 1024)
    p = pad_to_canvas(s, (1024, 1024))
    assert (p.content_h, p.content_w) == (1024, 512)
    assert (p.orig_h, p.orig_w) == (2048, 1024)
    assert p.mask.dtype == bool


def test_crop_round_trip_exact_when_unresized():
    s = make_sample(100, 60)
    p = pad_to_canvas(s, (128, 128))
    pred = p.image[:1]  # channel 0 as a stand-in prediction
    out = crop_to_content(pred, p)
    assert out.shape == (1, 100, 60)
    assert np.array_equal(out, s.image[:1])


def test_crop_restores_original_shape_after_resize():
    s = make_sample(2048, 1024)
    p = pad_to_canvas(s, (1024, 1024))
    pred = np.zeros((1, 1024, 1024), dtype=np.float32)
    out = crop_to_content(pred, p)
    assert out.shape == (1, 2048, 1024)


def test_crop_shape_mismatch_errors():
    s = make_sample(64, 64)
    p = pad_to_canvas(s, (128, 128))
    with pytest.raises(ValueError):
        crop_to_content(np.zeros((1, 64, 64), dtype=np.float32), p)


def test_non_positive_dims_error():
    img = np.zeros((3, 0, 8), dtype=np.float32)
    mask = np.zeros((1, 0, 8), dtype=bool)
    s = Sample.__new__(Sample)  # bypass Sample validation to hit padding's check
    s.image, s.mask, s.source_id = img, mask, "bad"
    with pytest.raises(ValueError):
        pad_to_canvas(s, (128, 128))


def test_content_independent_of_canvas_size():
    s = make_sample(50, 70)
    small = pad_to_canvas(s, (128, 128))
    big = pad_to_canvas(s, (256, 256))
    assert np.array_equal(small.image[:, :50, :70], big.image[:, :50, :70])
