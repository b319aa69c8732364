"""Low-rank adapter layers injected into a frozen base model.

Each targeted nn.Linear is wrapped so its output becomes
base(x) + (alpha / rank) * B(A(dropout(x))), with A initialized small and B
initialized to zero: a freshly injected adapter leaves the base function
bit-identical until training moves B. Only A/B ever receive gradients; the
wrapped base weights stay frozen and are saved/compared untouched.
"""

from __future__ import annotations

import json
import math
import os
from typing import Dict, Iterator, Tuple

import torch
from torch import nn

from .errors import ArtifactMismatch

ADAPTER_CONFIG_NAME = "adapter_config.json"
ADAPTER_WEIGHTS_NAME = "adapter_weights.pt"


class LoraLinear(nn.Module):
    """A frozen linear layer plus a trainable low-rank residual."""

    def __init__(self, base: nn.Linear, rank: int, alpha: float, dropout: float):
        super().__init__()
        self.base = base
        self.rank = rank
        self.alpha = alpha
        self.scaling = alpha / rank
        self.lora_dropout = nn.Dropout(dropout)
        self.lora_a = nn.Linear(base.in_features, rank, bias=False)
        self.lora_b = nn.Linear(rank, base.out_features, bias=False)
        nn.init.kaiming_uniform_(self.lora_a.weight, a=math.sqrt(5))
        nn.init.zeros_(self.lora_b.weight)
        for param in self.base.parameters():
            param.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + self.scaling * self.lora_b(
            self.lora_a(self.lora_dropout(x))
        )


def _target_parents(model: nn.Module, target_names) -> Iterator[Tuple[nn.Module, str, nn.Linear]]:
    wanted = set(target_names)
    for module_name, module in model.named_modules():
        for child_name, child in module.named_children():
            if child_name in wanted and isinstance(child, nn.Linear):
                yield module, child_name, child


def apply_lora(
    model: nn.Module, rank: int, alpha: float, dropout: float, target_modules
) -> int:
    """Freeze the model and wrap every targeted linear; returns wrap count."""
    for param in model.parameters():
        param.requires_grad_(False)
    wrapped = 0
    for parent, child_name, child in list(_target_parents(model, target_modules)):
        setattr(parent, child_name, LoraLinear(child, rank, alpha, dropout))
        wrapped += 1
    if wrapped == 0:
        raise ValueError(
            f"no modules named {sorted(set(target_modules))} found to adapt"
        )
    return wrapped


def adapter_parameters(model: nn.Module) -> Iterator[nn.Parameter]:
    for name, param in model.named_parameters():
        if "lora_a" in name or "lora_b" in name:
            yield param


def adapter_state_dict(model: nn.Module) -> Dict[str, torch.Tensor]:
    return {
        name: tensor
        for name, tensor in model.state_dict().items()
        if "lora_a" in name or "lora_b" in name
    }


def save_adapter(model: nn.Module, config: dict, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    torch.save(adapter_state_dict(model), os.path.join(out_dir, ADAPTER_WEIGHTS_NAME))
    with open(os.path.join(out_dir, ADAPTER_CONFIG_NAME), "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2, sort_keys=True)
        f.write("\n")
    return out_dir


def load_adapter(model: nn.Module, adapter_dir: str, base_model_ref: str) -> dict:
    """Inject adapters configured per the artifact and load their weights."""
    config_path = os.path.join(adapter_dir, ADAPTER_CONFIG_NAME)
    weights_path = os.path.join(adapter_dir, ADAPTER_WEIGHTS_NAME)
    if not os.path.exists(config_path) or not os.path.exists(weights_path):
        raise ArtifactMismatch(f"{adapter_dir} is not an adapter artifact")
    with open(config_path, "r", encoding="utf-8") as f:
        config = json.load(f)
    if config.get("base_model_ref") != base_model_ref:
        raise ArtifactMismatch(
            f"adapter was trained on {config.get('base_model_ref')!r}, "
            f"not {base_model_ref!r}"
        )
    apply_lora(
        model,
        rank=config["rank"],
        alpha=config["alpha"],
        dropout=0.0,  # inference
        target_modules=config["target_modules"],
    )
    state = torch.load(weights_path, map_location="cpu", weights_only=True)
    try:
        _, unexpected = model.load_state_dict(state, strict=False)
    except RuntimeError as exc:
        raise ArtifactMismatch(f"adapter weights do not fit the base model: {exc}")
    if unexpected:
        raise ArtifactMismatch(f"unexpected adapter tensors: {unexpected[:3]}")
    loaded = set(state)
    expected = set(adapter_state_dict(model))
    if loaded != expected:
        raise ArtifactMismatch("adapter tensors do not match the base architecture")
    return config
