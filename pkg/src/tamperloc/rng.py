"""Deterministic random number plumbing.

A single integer seed must reproduce every stochastic decision in the
pipeline: parameter init, dataset synthesis, augmentation draws, shuffling.
Counter-based Philox streams keep that true even when samples are processed
in parallel or out of order: each sample derives its own stream from
(seed, *keys) instead of consuming from a shared sequential state.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch

_DEFAULT: "Rng | None" = None


class Rng:
    """A seeded, counter-based generator.

    ``np`` exposes a ``numpy.random.Generator``; :meth:`derive` forks an
    independent child stream keyed by arbitrary strings/ints, so the same
    (seed, keys) pair always yields the same draws regardless of call order
    elsewhere.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.np = np.random.Generator(np.random.Philox(key=self.seed))

    def derive(self, *keys) -> "Rng":
        material = repr((self.seed,) + tuple(keys)).encode("utf-8")
        child_seed = int.from_bytes(hashlib.sha256(material).digest()[:8], "little")
        return Rng(child_seed)

    def torch_generator(self) -> torch.Generator:
        g = torch.Generator()
        g.manual_seed(self.seed & 0x7FFFFFFFFFFFFFFF)
        return g


def seed_all(seed: int) -> Rng:
    """Seed torch's global state and register the default pipeline generator."""
    global _DEFAULT
    torch.manual_seed(seed)
    _DEFAULT = Rng(seed)
    return _DEFAULT


def default_rng() -> Rng:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = seed_all(0)
    return _DEFAULT
