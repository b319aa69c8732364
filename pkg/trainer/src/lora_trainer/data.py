"""Training-file loading and prompt-masked batch construction.

Records are JSONL objects {"prompt", "completion"}. Each example is encoded
as prompt tokens + completion tokens + EOS; label positions covering the
prompt are set to the ignore index so only completion (and EOS) tokens
contribute to the loss.
"""

from __future__ import annotations

import json
from typing import Dict, List

import torch

from .errors import SchemaMismatch

IGNORE_INDEX = -100


def load_training_records(path: str) -> List[Dict[str, str]]:
    records = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaMismatch(f"line {line_number}: invalid JSON ({exc.msg})")
                if (
                    not isinstance(record, dict)
                    or not isinstance(record.get("prompt"), str)
                    or not isinstance(record.get("completion"), str)
                    or not record["prompt"]
                    or not record["completion"]
                ):
                    raise SchemaMismatch(
                        f"line {line_number}: expected non-empty prompt/completion strings"
                    )
                records.append({"prompt": record["prompt"], "completion": record["completion"]})
    except OSError as exc:
        raise SchemaMismatch(f"cannot read training file {path}: {exc}") from exc
    if not records:
        raise SchemaMismatch(f"{path} contains no training records")
    return records


def encode_record(tokenizer, record: Dict[str, str], max_seq_len: int):
    """Token ids plus labels with prompt positions masked out."""
    prompt_ids = tokenizer(record["prompt"], add_special_tokens=False)["input_ids"]
    completion_ids = tokenizer(record["completion"], add_special_tokens=False)[
        "input_ids"
    ]
    input_ids = prompt_ids + completion_ids + [tokenizer.eos_token_id]
    labels = (
        [IGNORE_INDEX] * len(prompt_ids)
        + completion_ids
        + [tokenizer.eos_token_id]
    )
    return input_ids[:max_seq_len], labels[:max_seq_len]


def collate(encoded, pad_token_id: int):
    """Right-pad a list of (input_ids, labels) into batch tensors."""
    width = max(len(ids) for ids, _ in encoded)
    batch_ids, batch_labels, batch_mask = [], [], []
    for ids, labels in encoded:
        pad = width - len(ids)
        batch_ids.append(ids + [pad_token_id] * pad)
        batch_labels.append(labels + [IGNORE_INDEX] * pad)
        batch_mask.append([1] * len(ids) + [0] * pad)
    return {
        "input_ids": torch.tensor(batch_ids, dtype=torch.long),
        "labels": torch.tensor(batch_labels, dtype=torch.long),
        "attention_mask": torch.tensor(batch_mask, dtype=torch.long),
    }
