"""Domain types, dataset persistence, and deterministic seed selection.

Datasets are UTF-8 JSONL, one object per line with fields
{"text", "label", "source", "round", "verdict"}. Task definitions live in a
single JSON document. Labels are compared case-insensitively after trimming
but stored with the task's canonical casing.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .errors import (
    InsufficientExamples,
    IoFailure,
    MalformedRecord,
    UnknownLabel,
)
from .rng import SplitMix64, fnv1a64

SOURCE_REAL = "real"
SOURCE_SYNTHETIC = "synthetic"


class VerdictKind(str, enum.Enum):
    ACCEPTED = "accepted"
    REJECTED_DUPLICATE = "rejected_duplicate"
    REJECTED_TOO_SHORT = "rejected_too_short"
    REJECTED_TOO_LONG = "rejected_too_long"
    REJECTED_MALFORMED = "rejected_malformed"
    REJECTED_INCONSISTENT = "rejected_inconsistent"
    REJECTED_UNPARSEABLE = "rejected_unparseable"


@dataclass(frozen=True)
class FilterVerdict:
    """Outcome of the filtering stages for one candidate.

    predicted_label is only ever set for verdicts produced by the
    consistency check (accepted / rejected_inconsistent); hygiene verdicts
    and skip-consistency accepts carry none.
    """

    kind: VerdictKind
    predicted_label: Optional[str] = None

    def __post_init__(self):
        if self.predicted_label is not None and self.kind not in (
            VerdictKind.ACCEPTED,
            VerdictKind.REJECTED_INCONSISTENT,
        ):
            raise ValueError(
                f"verdict {self.kind.value} cannot carry a predicted label"
            )


@dataclass(frozen=True)
class TaskSpec:
    """A classification task: label set, instruction templates, markers.

    generation_instruction may use the slots {label}, {label_lower} and
    {domain_noun}; classification_instruction may use {label_list}.
    """

    task_id: str
    labels: tuple
    generation_instruction: str
    classification_instruction: str
    domain_noun: str = ""
    text_marker: str = "Text:"
    label_marker: str = "Label:"

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise ValueError("a task needs at least 2 labels")
        seen = set()
        for label in self.labels:
            if not label.strip():
                raise ValueError("labels must be non-empty")
            if "\n" in label:
                raise ValueError(f"label {label!r} contains a newline")
            key = label.strip().lower()
            if key in seen:
                raise ValueError(f"duplicate label (case-insensitive): {label!r}")
            seen.add(key)
        if not self.text_marker or not self.label_marker:
            raise ValueError("markers must be non-empty")
        if self.text_marker == self.label_marker:
            raise ValueError("text and label markers must be distinct")

    def canonical_label(self, name: str) -> str:
        """Map `name` onto the task's casing; raises UnknownLabel otherwise."""
        wanted = name.strip().lower()
        for label in self.labels:
            if label.strip().lower() == wanted:
                return label
        raise UnknownLabel(name)

    def label_list_phrase(self) -> str:
        """Labels joined for instructions: "A or B", "A, B or C"."""
        if len(self.labels) == 2:
            return f"{self.labels[0]} or {self.labels[1]}"
        return ", ".join(self.labels[:-1]) + f" or {self.labels[-1]}"

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "labels": list(self.labels),
            "generation_instruction": self.generation_instruction,
            "classification_instruction": self.classification_instruction,
            "domain_noun": self.domain_noun,
            "text_marker": self.text_marker,
            "label_marker": self.label_marker,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaskSpec":
        return cls(
            task_id=data["task_id"],
            labels=tuple(data["labels"]),
            generation_instruction=data["generation_instruction"],
            classification_instruction=data["classification_instruction"],
            domain_noun=data.get("domain_noun", ""),
            text_marker=data.get("text_marker", "Text:"),
            label_marker=data.get("label_marker", "Label:"),
        )


def load_task(path: str) -> TaskSpec:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return TaskSpec.from_dict(json.load(handle))
    except OSError as exc:
        raise IoFailure(f"cannot read task file {path}: {exc}") from exc


def save_task(task: TaskSpec, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(task.to_dict(), handle, indent=2)
            handle.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write task file {path}: {exc}") from exc


@dataclass(frozen=True)
class LabeledExample:
    """One (text, label) pair with provenance."""

    text: str
    label: str
    source: str = SOURCE_REAL
    round: int = 0
    verdict: Optional[str] = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("example text is empty after trimming")
        if self.source not in (SOURCE_REAL, SOURCE_SYNTHETIC):
            raise ValueError(f"unknown source {self.source!r}")
        if self.round < 0:
            raise ValueError("round must be >= 0")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "label": self.label,
            "source": self.source,
            "round": self.round,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class GenerationPlan:
    """Budget for the generation loop.

    Defaults mirror the 4-real / 21-synthetic per-class setting; n_per_class
    of 0 is allowed and means "no synthesis, seeds only".
    """

    n_per_class: int = 21
    seeds_per_class: int = 4
    batch_size: int = 8
    max_rounds: int = 40
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 0:
            raise ValueError("n_per_class must be >= 0")
        if self.seeds_per_class < 1:
            raise ValueError("seeds_per_class must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")

    def to_dict(self) -> dict:
        return {
            "n_per_class": self.n_per_class,
            "seeds_per_class": self.seeds_per_class,
            "batch_size": self.batch_size,
            "max_rounds": self.max_rounds,
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class DecodingConfig:
    """Sampling parameters forwarded to the completion server.

    temperature 0 selects the server's greedy setting (used for
    classification calls); generation defaults to temperature 1.0 / top_k 50.
    """

    temperature: float = 1.0
    top_k: int = 50
    num_beams: int = 1
    max_new_tokens: int = 128
    stop_sequences: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.num_beams < 1:
            raise ValueError("num_beams must be >= 1")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_k": self.top_k,
            "num_beams": self.num_beams,
            "max_new_tokens": self.max_new_tokens,
            "stop_sequences": list(self.stop_sequences),
        }


_VERDICT_VALUES = {kind.value for kind in VerdictKind}
_RECORD_FIELDS = {"text", "label", "source", "round", "verdict"}


def example_from_record(record: dict, task: Optional[TaskSpec] = None) -> LabeledExample:
    """Validate one parsed JSONL record; raises ValueError / UnknownLabel."""
    if not isinstance(record, dict):
        raise ValueError("record is not an object")
    missing = _RECORD_FIELDS - set(record)
    if missing:
        raise ValueError(f"record is missing fields: {sorted(missing)}")
    text = record["text"]
    label = record["label"]
    source = record["source"]
    round_no = record["round"]
    verdict = record["verdict"]
    if not isinstance(text, str) or not isinstance(label, str):
        raise ValueError("text and label must be strings")
    if not isinstance(round_no, int) or isinstance(round_no, bool):
        raise ValueError("round must be an integer")
    if verdict is not None:
        if not isinstance(verdict, str) or verdict not in _VERDICT_VALUES:
            raise ValueError(f"unknown verdict {verdict!r}")
    if source == SOURCE_REAL and round_no != 0:
        raise ValueError("real examples must carry round 0")
    if source == SOURCE_SYNTHETIC:
        if round_no < 1:
            raise ValueError("synthetic examples must carry round >= 1")
        if verdict is None:
            raise ValueError("synthetic examples must carry a verdict")
    if task is not None:
        label = task.canonical_label(label)
    return LabeledExample(
        text=text, label=label, source=source, round=round_no, verdict=verdict
    )


def load_dataset(path: str, task: Optional[TaskSpec] = None) -> List[LabeledExample]:
    """Read a JSONL dataset, preserving file order.

    When `task` is given, labels are canonicalized against it and unknown
    labels are rejected.
    """
    examples: List[LabeledExample] = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRecord(line_number, f"invalid JSON: {exc.msg}")
                try:
                    examples.append(example_from_record(record, task))
                except UnknownLabel:
                    raise
                except ValueError as exc:
                    raise MalformedRecord(line_number, str(exc))
    except OSError as exc:
        raise IoFailure(f"cannot read dataset {path}: {exc}") from exc
    return examples


def write_dataset(path: str, examples: Sequence[LabeledExample]) -> None:
    """Write examples as JSONL; load_dataset() round-trips field-for-field."""
    try:
        with open(path, "w", encoding="utf-8") as handle:
            for example in examples:
                handle.write(json.dumps(example.to_dict(), ensure_ascii=False))
                handle.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write dataset {path}: {exc}") from exc


def select_seeds(
    dataset: Sequence[LabeledExample], k: int, rng_seed: int
) -> List[LabeledExample]:
    """Pick k real examples per label, without replacement, deterministically.

    Labels are visited in order of first appearance; each label consumes an
    independent SplitMix64 stream derived from (rng_seed, label) so the
    selection for one label is unaffected by the others.
    """
    pools: Dict[str, List[LabeledExample]] = {}
    order: List[str] = []
    for example in dataset:
        if example.source != SOURCE_REAL:
            continue
        if example.label not in pools:
            pools[example.label] = []
            order.append(example.label)
        pools[example.label].append(example)

    selected: List[LabeledExample] = []
    for label in order:
        pool = pools[label]
        if len(pool) < k:
            raise InsufficientExamples(label, len(pool), k)
        stream = SplitMix64(rng_seed ^ fnv1a64(label))
        for index in stream.sample_indices(len(pool), k):
            selected.append(pool[index])
    return selected
