"""Transformer encoder-decoder NMT: model, training, decoding, checks."""

from .config import TrainingConfig
from .model import Transformer
from .decode import beam_decode, greedy_decode
from .train import Checkpoint, train

__all__ = [
    "TrainingConfig",
    "Transformer",
    "beam_decode",
    "greedy_decode",
    "Checkpoint",
    "train",
]
