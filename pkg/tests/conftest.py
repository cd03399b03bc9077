import numpy as np
import pytest
import torch

from tamperloc.config import toy_pipeline_config
from tamperloc.rng import Rng


@pytest.fixture(autouse=True)
def _fixed_torch_seed():
    torch.manual_seed(0)


@pytest.fixture
def rng():
    return Rng(1234)


@pytest.fixture
def toy_cfg():
    return toy_pipeline_config()


@pytest.fixture
def textured_sample(rng):
    from tamperloc.data import Sample, _textured_base

    img = _textured_base(64, 64, rng)
    return Sample(image=img, mask=np.zeros((1, 64, 64), dtype=bool), source_id="fixture")
