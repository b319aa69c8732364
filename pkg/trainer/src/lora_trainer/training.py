"""Adapter fine-tuning with next-token loss masked to completion tokens."""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import List, Optional

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from .config import TrainerConfig
from .data import collate, encode_record, load_training_records
from .errors import ModelLoadFailure, NonFiniteLoss
from .lora import adapter_parameters, apply_lora, save_adapter

REPORT_NAME = "training_report.json"


@dataclass
class TrainingRunReport:
    per_epoch_loss: List[float] = field(default_factory=list)
    final_loss: Optional[float] = None
    wall_time_s: float = 0.0
    adapter_path: str = ""
    config: dict = field(default_factory=dict)
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "per_epoch_loss": list(self.per_epoch_loss),
            "final_loss": self.final_loss,
            "wall_time_s": self.wall_time_s,
            "adapter_path": self.adapter_path,
            "config": dict(self.config),
            "status": self.status,
        }


def load_base(base_model_ref: str):
    try:
        tokenizer = AutoTokenizer.from_pretrained(base_model_ref)
        model = AutoModelForCausalLM.from_pretrained(base_model_ref)
    except (OSError, ValueError, EnvironmentError) as exc:
        raise ModelLoadFailure(f"cannot load base model {base_model_ref!r}: {exc}")
    return model, tokenizer


def train_adapter(train_path: str, config: TrainerConfig, out_dir: str):
    """Fine-tune low-rank adapters on a prompt/completion export.

    Returns (adapter_dir, TrainingRunReport). Base weights are never
    updated; only adapter parameters enter the optimizer.
    """
    records = load_training_records(train_path)
    model, tokenizer = load_base(config.base_model_ref)

    torch.manual_seed(config.seed)
    apply_lora(
        model,
        rank=config.rank,
        alpha=config.alpha,
        dropout=config.dropout,
        target_modules=config.target_modules,
    )
    model.train()

    encoded = [encode_record(tokenizer, record, config.max_seq_len) for record in records]
    parameters = list(adapter_parameters(model))
    optimizer = torch.optim.Adam(parameters, lr=config.learning_rate)
    schedule = torch.optim.lr_scheduler.LambdaLR(
        optimizer,
        lambda step: min(1.0, (step + 1) / max(1, config.warmup_steps)),
    )
    shuffler = torch.Generator().manual_seed(config.seed)

    report = TrainingRunReport(config=config.to_dict())
    started = time.monotonic()
    for epoch in range(1, config.epochs + 1):
        order = torch.randperm(len(encoded), generator=shuffler).tolist()
        total, batches = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = collate(
                [encoded[i] for i in order[start : start + config.batch_size]],
                tokenizer.pad_token_id,
            )
            optimizer.zero_grad()
            loss = model(**batch).loss
            if not math.isfinite(loss.item()):
                report.status = "non_finite_loss"
                report.wall_time_s = time.monotonic() - started
                _write_report(out_dir, report)
                raise NonFiniteLoss(epoch, report.to_dict())
            loss.backward()
            optimizer.step()
            schedule.step()
            total += loss.item()
            batches += 1
        report.per_epoch_loss.append(total / batches)

    report.final_loss = report.per_epoch_loss[-1]
    report.wall_time_s = time.monotonic() - started
    adapter_dir = save_adapter(
        model,
        {
            "base_model_ref": config.base_model_ref,
            "rank": config.rank,
            "alpha": config.alpha,
            "dropout": config.dropout,
            "target_modules": list(config.target_modules),
        },
        out_dir,
    )
    report.adapter_path = adapter_dir
    _write_report(out_dir, report)
    return adapter_dir, report


def _write_report(out_dir: str, report: TrainingRunReport) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, REPORT_NAME), "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2)
        handle.write("\n")
