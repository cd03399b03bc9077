"""Image manipulation localization pipeline.

Conventions shared by every module:
  * images are channel-first float32 tensors in [0, 1], shape (3, H, W)
  * masks are boolean tensors of shape (1, H, W); True = manipulated
  * batches prepend a leading N dimension
  * all randomness flows through :mod:`tamperloc.rng`
"""

__version__ = "0.1.0"
