"""Symmetrical SyncMap: self-organizing chunk discovery in Markov sequences."""

from .dynamics import DynamicsConfig, Variant, available_backends, train
from .encoder import EncoderConfig, encode, threshold_from_memory
from .metrics import nmi
from .problems import make_preset, random_walk

__all__ = [
    "DynamicsConfig", "EncoderConfig", "Variant", "available_backends", "encode",
    "make_preset", "nmi", "random_walk", "threshold_from_memory", "train",
]
__version__ = "0.1.0"
