"""Generation step: class-conditioned prompting and completion parsing.

The model is free to keep emitting Text/Label blocks after its first
example, so one completion can yield several candidates. Parsing splits the
raw continuation on both task markers: the span before the first marker is
the first candidate, every span following a text marker is a further
candidate, and spans following a label marker (the model echoing labels) are
discarded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Sequence

from .gateway import CompletionRequest, Gateway
from .prompts import render_generation_prompt
from .task_model import DecodingConfig, LabeledExample, TaskSpec


@dataclass(frozen=True)
class Candidate:
    """A parsed completion span, not yet filtered."""

    text: str
    intended_label: str
    round: int
    raw_completion: str

    def __post_init__(self):
        if self.round < 1:
            raise ValueError("candidates are produced in rounds >= 1")


def parse_completion(raw: str, task: TaskSpec) -> List[str]:
    """Split a raw continuation into candidate texts. Total function."""
    pattern = re.compile(
        "|".join((re.escape(task.text_marker), re.escape(task.label_marker)))
    )
    candidates: List[str] = []
    keep = True  # the span before the first marker is candidate material
    cursor = 0
    for match in pattern.finditer(raw):
        span = raw[cursor : match.start()]
        if keep and span.strip():
            candidates.append(span.strip())
        keep = match.group() == task.text_marker
        cursor = match.end()
    tail = raw[cursor:]
    if keep and tail.strip():
        candidates.append(tail.strip())
    return candidates


def generate_batch(
    gateway: Gateway,
    task: TaskSpec,
    target_label: str,
    seeds: Sequence[LabeledExample],
    decoding: DecodingConfig,
    round_no: int,
) -> List[Candidate]:
    """One completion call for one label, parsed into stamped candidates.

    Unparseable continuations yield an empty list rather than an error;
    gateway failures propagate.
    """
    prompt = render_generation_prompt(task, target_label, seeds)
    response = gateway.complete(
        CompletionRequest(
            prompt=prompt.text, decoding=decoding, model_ref=gateway.model_ref
        )
    )
    label = task.canonical_label(target_label)
    return [
        Candidate(
            text=text,
            intended_label=label,
            round=round_no,
            raw_completion=response.text,
        )
        for text in parse_completion(response.text, task)
    ]


def candidate_to_dict(candidate: Candidate) -> dict:
    return {
        "text": candidate.text,
        "intended_label": candidate.intended_label,
        "round": candidate.round,
        "raw_completion": candidate.raw_completion,
    }


def candidate_from_dict(data: dict) -> Candidate:
    return Candidate(
        text=data["text"],
        intended_label=data["intended_label"],
        round=data["round"],
        raw_completion=data["raw_completion"],
    )
