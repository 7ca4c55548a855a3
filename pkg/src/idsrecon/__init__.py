"""Iterative belief-combining trace reconstruction over IDS channels."""

from .bcjr import TraceDecoder
from .channel import DATASET_PARAMS, ChannelParams, sample_cluster, transmit
from .combiner import DecodeReport, FusionConfig, forward_soft_baseline, iterate
from .core import DNA, Alphabet, Cluster
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "BACKEND",
    "ChannelParams",
    "Cluster",
    "DATASET_PARAMS",
    "DNA",
    "DecodeReport",
    "FusionConfig",
    "TraceDecoder",
    "forward_soft_baseline",
    "iterate",
    "sample_cluster",
    "transmit",
]
