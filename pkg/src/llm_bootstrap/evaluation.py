"""Accuracy / latency evaluation in zero-shot, ICL, or tuned mode.

Tuned models are queried with the zero-shot prompt (training aligned the two
distributions), so `tuned` only differs from `zero_shot` in which endpoint
answers. Classification decoding is greedy so reruns are reproducible;
unparseable replies count as incorrect.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import EmptyDemos, IoFailure
from .filtering import classification_decoding, parse_label
from .gateway import CompletionRequest, Gateway
from .prompts import render_classification_prompt, render_zero_shot_prompt
from .task_model import LabeledExample, TaskSpec


class EvalKind(str, enum.Enum):
    ZERO_SHOT = "zero_shot"
    ICL = "icl"
    TUNED = "tuned"


@dataclass(frozen=True)
class EvalMode:
    kind: EvalKind
    demos: Tuple[LabeledExample, ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "demos", tuple(self.demos))
        if self.kind is EvalKind.ICL and not self.demos:
            raise EmptyDemos("icl mode requires demos")
        if self.kind is not EvalKind.ICL and self.demos:
            raise ValueError(f"{self.kind.value} mode does not take demos")


@dataclass(frozen=True)
class EvalRecord:
    text: str
    gold: str
    predicted: Optional[str]
    latency_ms: float

    @property
    def correct(self) -> bool:
        return (
            self.predicted is not None
            and self.predicted.strip().lower() == self.gold.strip().lower()
        )


@dataclass
class EvalSummary:
    accuracy: float
    mean_latency_ms: float
    per_label_accuracy: Dict[str, float]
    unparseable: int
    records: List[EvalRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "mean_latency_ms": self.mean_latency_ms,
            "per_label_accuracy": dict(self.per_label_accuracy),
            "unparseable": self.unparseable,
            "records": [
                {
                    "text": record.text,
                    "gold": record.gold,
                    "predicted": record.predicted,
                    "latency_ms": record.latency_ms,
                }
                for record in self.records
            ],
        }


def classify_one(
    gateway: Gateway, task: TaskSpec, mode: EvalMode, text: str
) -> Tuple[Optional[str], float]:
    """Classify one text; returns (label or None, gateway latency in ms)."""
    if mode.kind is EvalKind.ICL:
        prompt = render_classification_prompt(task, mode.demos, text, mode.rng_seed)
    else:
        prompt = render_zero_shot_prompt(task, text)
    response = gateway.complete(
        CompletionRequest(
            prompt=prompt.text,
            decoding=classification_decoding(),
            model_ref=gateway.model_ref,
        )
    )
    return parse_label(response.text, task), response.latency_ms


def evaluate(
    gateway: Gateway,
    task: TaskSpec,
    mode: EvalMode,
    testset: Sequence[LabeledExample],
    checkpoint_path: Optional[str] = None,
    checkpoint_every: int = 100,
) -> EvalSummary:
    """Classify a labeled test set and aggregate accuracy and latency.

    Records keep the input order. When checkpoint_path is given, partial
    records are flushed there every `checkpoint_every` examples.
    """
    if not testset:
        raise ValueError("test set must be non-empty")
    if mode.kind is EvalKind.ICL:
        covered = {task.canonical_label(demo.label) for demo in mode.demos}
        missing = [label for label in task.labels if label not in covered]
        if missing:
            raise EmptyDemos(f"icl mode needs a demo for every label; missing {missing}")
    records: List[EvalRecord] = []
    for example in testset:
        gold = task.canonical_label(example.label)
        predicted, latency_ms = classify_one(gateway, task, mode, example.text)
        records.append(
            EvalRecord(
                text=example.text, gold=gold, predicted=predicted, latency_ms=latency_ms
            )
        )
        if checkpoint_path and len(records) % checkpoint_every == 0:
            _flush_partial(checkpoint_path, records)
    return summarize(task, records)


def summarize(task: TaskSpec, records: Sequence[EvalRecord]) -> EvalSummary:
    """Aggregate records; accuracy is recomputable from them by definition."""
    correct = sum(1 for record in records if record.correct)
    per_label: Dict[str, float] = {}
    for label in task.labels:
        of_label = [record for record in records if record.gold == label]
        if of_label:
            per_label[label] = sum(1 for r in of_label if r.correct) / len(of_label)
    return EvalSummary(
        accuracy=correct / len(records),
        mean_latency_ms=sum(r.latency_ms for r in records) / len(records),
        per_label_accuracy=per_label,
        unparseable=sum(1 for record in records if record.predicted is None),
        records=list(records),
    )


def _flush_partial(path: str, records: Sequence[EvalRecord]) -> None:
    payload = [
        {
            "text": record.text,
            "gold": record.gold,
            "predicted": record.predicted,
            "latency_ms": record.latency_ms,
        }
        for record in records
    ]
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle)
    except OSError as exc:
        raise IoFailure(f"cannot write eval checkpoint {path}: {exc}") from exc
