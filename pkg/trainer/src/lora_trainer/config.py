"""Training configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

# Attention projection matrices; the common adapter target set.
DEFAULT_TARGET_MODULES: Tuple[str, ...] = ("q_proj", "k_proj", "v_proj", "o_proj")


@dataclass(frozen=True)
class TrainerConfig:
    base_model_ref: str
    rank: int = 8
    alpha: float = 32.0
    dropout: float = 0.1
    epochs: int = 100
    batch_size: int = 8
    learning_rate: float = 2e-4
    warmup_steps: int = 10
    seed: int = 0
    max_seq_len: int = 512
    target_modules: Tuple[str, ...] = DEFAULT_TARGET_MODULES

    def __post_init__(self):
        object.__setattr__(self, "target_modules", tuple(self.target_modules))
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "base_model_ref": self.base_model_ref,
            "rank": self.rank,
            "alpha": self.alpha,
            "dropout": self.dropout,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "warmup_steps": self.warmup_steps,
            "seed": self.seed,
            "max_seq_len": self.max_seq_len,
            "target_modules": list(self.target_modules),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainerConfig":
        return cls(
            base_model_ref=data["base_model_ref"],
            rank=data.get("rank", 8),
            alpha=data.get("alpha", 32.0),
            dropout=data.get("dropout", 0.1),
            epochs=data.get("epochs", 100),
            batch_size=data.get("batch_size", 8),
            learning_rate=data.get("learning_rate", 2e-4),
            warmup_steps=data.get("warmup_steps", 10),
            seed=data.get("seed", 0),
            max_seq_len=data.get("max_seq_len", 512),
            target_modules=tuple(
                data.get("target_modules", DEFAULT_TARGET_MODULES)
            ),
        )
