from .vit import ViTEncoder, window_partition, window_unpartition
from .pyramid import SimpleFeaturePyramid, LayerNorm2d
from .head import AllMLPHead, upsample_full
from .net import TamperNet

__all__ = [
    "ViTEncoder",
    "window_partition",
    "window_unpartition",
    "SimpleFeaturePyramid",
    "LayerNorm2d",
    "AllMLPHead",
    "upsample_full",
    "TamperNet",
]
