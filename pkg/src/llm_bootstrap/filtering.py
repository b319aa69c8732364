"""Filtering step: hygiene checks plus label-consistency via the model itself.

Basic hygiene rejects duplicates (exact match after normalization), texts
outside the word-count bounds, and malformed texts (marker fragments, or
nothing left after normalization). Survivors are then classified with the
same model in the ICL setting; a prediction that disagrees with the label
the candidate was generated for rejects it.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set

from .gateway import CompletionRequest, Gateway
from .generation import Candidate
from .prompts import render_classification_prompt
from .task_model import (
    DecodingConfig,
    FilterVerdict,
    LabeledExample,
    TaskSpec,
    VerdictKind,
)


@dataclass(frozen=True)
class LengthBounds:
    min_words: int = 3
    max_words: int = 256

    def __post_init__(self):
        if self.min_words < 1 or self.min_words > self.max_words:
            raise ValueError("need 1 <= min_words <= max_words")

    def to_dict(self) -> dict:
        return {"min_words": self.min_words, "max_words": self.max_words}


def normalize(text: str) -> str:
    """Lowercase, collapse whitespace, strip ends and terminal .!? runs."""
    collapsed = " ".join(text.lower().split())
    return collapsed.rstrip(".!?").rstrip()


class DedupIndex:
    """Membership set over normalized texts: seeds plus accepted synthetics."""

    def __init__(self, seed_texts: Iterable[str] = ()):
        self._keys: Set[str] = {normalize(text) for text in seed_texts}

    def __contains__(self, text: str) -> bool:
        return normalize(text) in self._keys

    def add(self, text: str) -> None:
        self._keys.add(normalize(text))

    def discard(self, text: str) -> None:
        self._keys.discard(normalize(text))

    def __len__(self) -> int:
        return len(self._keys)


def classification_decoding() -> DecodingConfig:
    """Greedy-leaning decoding for label prediction, reproducible by design."""
    return DecodingConfig(temperature=0.0, top_k=1, num_beams=1, max_new_tokens=8)


def basic_filter(
    candidate: Candidate, index: DedupIndex, bounds: LengthBounds, task: TaskSpec
) -> FilterVerdict:
    """Hygiene verdict; an accepted verdict here is provisional.

    Checks run in order: duplicate, length, malformation. Texts passing all
    three are inserted into the index immediately so later duplicates within
    the same batch are caught.
    """
    if candidate.text in index:
        return FilterVerdict(VerdictKind.REJECTED_DUPLICATE)
    words = len(candidate.text.split())
    if words < bounds.min_words:
        return FilterVerdict(VerdictKind.REJECTED_TOO_SHORT)
    if words > bounds.max_words:
        return FilterVerdict(VerdictKind.REJECTED_TOO_LONG)
    if (
        task.text_marker in candidate.text
        or task.label_marker in candidate.text
        or not normalize(candidate.text)
    ):
        return FilterVerdict(VerdictKind.REJECTED_MALFORMED)
    index.add(candidate.text)
    return FilterVerdict(VerdictKind.ACCEPTED)


def parse_label(raw_output: str, task: TaskSpec) -> Optional[str]:
    """Extract a task label from a model reply; None when unparseable.

    First an exact case-insensitive match after trimming and stripping
    surrounding punctuation; failing that, the earliest whole-word label
    occurrence wins, ties at the same offset broken by task label order.
    """
    stripped = raw_output.strip().strip(string.punctuation + string.whitespace)
    lowered = stripped.lower()
    for label in task.labels:
        if lowered == label.strip().lower():
            return label

    haystack = raw_output.lower()
    best: Optional[str] = None
    best_pos = len(haystack) + 1
    for label in task.labels:
        pos = _find_whole_word(haystack, label.strip().lower())
        if pos != -1 and pos < best_pos:
            best_pos = pos
            best = label
    return best


_WORD_CHARS = set(string.ascii_lowercase + string.digits + "_")


def _find_whole_word(haystack: str, needle: str) -> int:
    """First occurrence of needle not embedded in a longer word, else -1."""
    start = 0
    while True:
        pos = haystack.find(needle, start)
        if pos == -1:
            return -1
        before = haystack[pos - 1] if pos > 0 else ""
        after_index = pos + len(needle)
        after = haystack[after_index] if after_index < len(haystack) else ""
        if before not in _WORD_CHARS and after not in _WORD_CHARS:
            return pos
        start = pos + 1


def consistency_filter(
    gateway: Gateway,
    task: TaskSpec,
    demos: Sequence[LabeledExample],
    candidate: Candidate,
    rng_seed: int,
) -> FilterVerdict:
    """Ask the model for the candidate's label and compare with the intent."""
    prompt = render_classification_prompt(task, demos, candidate.text, rng_seed)
    response = gateway.complete(
        CompletionRequest(
            prompt=prompt.text,
            decoding=classification_decoding(),
            model_ref=gateway.model_ref,
        )
    )
    predicted = parse_label(response.text, task)
    if predicted is None:
        return FilterVerdict(VerdictKind.REJECTED_UNPARSEABLE)
    if predicted.lower() == candidate.intended_label.strip().lower():
        return FilterVerdict(VerdictKind.ACCEPTED, predicted_label=predicted)
    return FilterVerdict(VerdictKind.REJECTED_INCONSISTENT, predicted_label=predicted)


@dataclass
class FilterReport:
    """Per-label, per-verdict bookkeeping for a filtering run."""

    counts: Dict[str, Dict[str, int]] = field(default_factory=dict)
    rounds_used: Dict[str, int] = field(default_factory=dict)

    def record(self, label: str, kind: VerdictKind) -> None:
        per_label = self.counts.setdefault(label, {})
        per_label[kind.value] = per_label.get(kind.value, 0) + 1

    def note_round(self, label: str, round_no: int) -> None:
        self.rounds_used[label] = max(self.rounds_used.get(label, 0), round_no)

    def processed(self, label: Optional[str] = None) -> int:
        if label is not None:
            return sum(self.counts.get(label, {}).values())
        return sum(sum(kinds.values()) for kinds in self.counts.values())

    def count(self, label: str, kind: VerdictKind) -> int:
        return self.counts.get(label, {}).get(kind.value, 0)

    def total(self, kind: VerdictKind) -> int:
        return sum(kinds.get(kind.value, 0) for kinds in self.counts.values())

    def accepted(self, label: str) -> int:
        return self.count(label, VerdictKind.ACCEPTED)

    def yield_ratio(self, label: str) -> float:
        """Accepted / processed for one label; 0 when nothing was processed."""
        processed = self.processed(label)
        return self.accepted(label) / processed if processed else 0.0

    def to_dict(self) -> dict:
        return {
            "counts": {label: dict(kinds) for label, kinds in self.counts.items()},
            "rounds_used": dict(self.rounds_used),
            "totals": {kind.value: self.total(kind) for kind in VerdictKind},
            "processed": self.processed(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FilterReport":
        report = cls()
        for label, kinds in data.get("counts", {}).items():
            report.counts[label] = {name: int(count) for name, count in kinds.items()}
        for label, rounds in data.get("rounds_used", {}).items():
            report.rounds_used[label] = int(rounds)
        return report

    def table(self) -> str:
        """Human-readable verdict table."""
        kinds = [kind.value for kind in VerdictKind]
        header = ["label"] + kinds + ["processed", "rounds", "yield"]
        rows = [header]
        for label in sorted(self.counts):
            rows.append(
                [label]
                + [str(self.counts[label].get(kind, 0)) for kind in kinds]
                + [
                    str(self.processed(label)),
                    str(self.rounds_used.get(label, 0)),
                    f"{self.yield_ratio(label):.3f}",
                ]
            )
        widths = [max(len(row[col]) for row in rows) for col in range(len(header))]
        lines = [
            "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
            for row in rows
        ]
        return "\n".join(lines)
