"""Renderers for the three prompt shapes: generation, few-shot
classification, and zero-shot classification.

Layout is fixed so prompts are byte-identical across runs: one blank line
after the instruction, a single newline between lines, a single space after
a marker when a value follows, and no trailing content after the final
marker. Demo order inside classification prompts is shuffled by a SplitMix64
stream seeded with rng_seed XOR FNV-1a(query) so each query gets its own
reproducible ordering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Tuple

from .errors import EmptyDemos, MixedSeedLabels
from .rng import SplitMix64, fnv1a64
from .task_model import LabeledExample, TaskSpec


class PromptKind(str, enum.Enum):
    GENERATION = "generation"
    ICL_CLASSIFICATION = "icl_classification"
    ZERO_SHOT_CLASSIFICATION = "zero_shot_classification"


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    kind: PromptKind
    demo_order: Tuple[int, ...] = ()


def _generation_instruction(task: TaskSpec, label: str) -> str:
    return task.generation_instruction.format(
        label=label,
        label_lower=label.lower(),
        domain_noun=task.domain_noun,
    )


def _classification_instruction(task: TaskSpec) -> str:
    return task.classification_instruction.format(label_list=task.label_list_phrase())


def _block(task: TaskSpec, text: str, label: str) -> str:
    return f"{task.text_marker} {text}\n{task.label_marker} {label}"


def render_generation_prompt(
    task: TaskSpec, target_label: str, seeds: Sequence[LabeledExample]
) -> RenderedPrompt:
    """Instruction, one Text/Label block per seed in order, trailing marker.

    The prompt ends with the bare text marker so the model continues with a
    new example.
    """
    if not seeds:
        raise ValueError("seeds must be non-empty")
    target = task.canonical_label(target_label)
    for seed in seeds:
        if task.canonical_label(seed.label) != target:
            raise MixedSeedLabels(target, seed.label)
    lines = [_generation_instruction(task, target), ""]
    for seed in seeds:
        lines.append(_block(task, seed.text, target))
    lines.append(task.text_marker)
    return RenderedPrompt(text="\n".join(lines), kind=PromptKind.GENERATION)


def render_classification_prompt(
    task: TaskSpec,
    demos: Sequence[LabeledExample],
    query: str,
    rng_seed: int,
) -> RenderedPrompt:
    """Instruction, shuffled demo blocks, then the query awaiting its label.

    demo_order records the permutation of input indices actually rendered.
    """
    if not demos:
        raise EmptyDemos("classification prompts need at least one demo")
    if not query:
        raise ValueError("query must be non-empty")
    order = list(range(len(demos)))
    SplitMix64(rng_seed ^ fnv1a64(query)).shuffle(order)
    lines = [_classification_instruction(task), ""]
    for index in order:
        demo = demos[index]
        lines.append(_block(task, demo.text, demo.label))
    lines.append(f"{task.text_marker} {query}\n{task.label_marker}")
    return RenderedPrompt(
        text="\n".join(lines),
        kind=PromptKind.ICL_CLASSIFICATION,
        demo_order=tuple(order),
    )


def render_zero_shot_prompt(task: TaskSpec, query: str) -> RenderedPrompt:
    """Instruction plus the query block alone; no demonstrations."""
    if not query:
        raise ValueError("query must be non-empty")
    text = (
        f"{_classification_instruction(task)}\n\n"
        f"{task.text_marker} {query}\n{task.label_marker}"
    )
    return RenderedPrompt(text=text, kind=PromptKind.ZERO_SHOT_CLASSIFICATION)
