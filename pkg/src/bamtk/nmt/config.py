"""Training configuration: every hyperparameter as a validated record."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml


@dataclass(frozen=True)
class TrainingConfig:
    enc_layers: int = 6
    dec_layers: int = 6
    attn_heads: int = 4
    ff_size: int = 1024
    hidden_size: int = 256
    emb_size: int = 256
    tie_softmax_to_output_embedding: bool = True
    share_vocab_across_languages: bool = False
    share_src_tgt_embedding: bool = False
    dropout: float = 0.1
    label_smoothing: float = 0.2
    learning_rate: float = 0.0004
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 120
    batch_tokens: int = 1024
    beam_width: int = 5
    seed: int = 42
    # decode length bound: 1.5 * source length + 5
    max_decode_ratio: float = 1.5
    max_decode_extra: int = 5
    grad_clip: float | None = None

    def __post_init__(self):
        for name in (
            "enc_layers",
            "dec_layers",
            "attn_heads",
            "ff_size",
            "hidden_size",
            "emb_size",
            "epochs",
            "batch_tokens",
            "beam_width",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.hidden_size % self.attn_heads != 0:
            raise ValueError("hidden_size must be divisible by attn_heads")
        if self.emb_size != self.hidden_size:
            raise ValueError("emb_size must equal hidden_size (residual stream)")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ValueError("label_smoothing must be in [0, 1)")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def replace(self, **overrides) -> "TrainingConfig":
        return dataclasses.replace(self, **overrides)

    def max_decode_len(self, src_len: int) -> int:
        return int(self.max_decode_ratio * src_len) + self.max_decode_extra

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            yaml.safe_dump(self.to_dict(), sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "TrainingConfig":
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)
