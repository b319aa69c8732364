"""Generate-filter loop, checkpointing, and training-set assembly.

Each label is filled independently: generate a batch, hygiene-filter it,
consistency-check the survivors, and append accepted candidates until the
per-class quota is met or max_rounds runs out. Rounds are transactional:
state and the dedup index only advance when a round completes, and a
checkpoint is rewritten atomically after every committed round, so a crash
or gateway failure never leaves half a round behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from filelock import FileLock, Timeout as LockTimeout

from .errors import (
    ConfigMismatch,
    CorruptCheckpoint,
    GatewayError,
    InsufficientYield,
    IoFailure,
    PipelineLocked,
)
from .filtering import (
    DedupIndex,
    FilterReport,
    LengthBounds,
    basic_filter,
    consistency_filter,
)
from .gateway import Gateway, GatewayConfig
from .generation import Candidate, generate_batch
from .prompts import render_zero_shot_prompt
from .rng import SplitMix64
from .task_model import (
    SOURCE_REAL,
    SOURCE_SYNTHETIC,
    DecodingConfig,
    GenerationPlan,
    LabeledExample,
    TaskSpec,
    VerdictKind,
    select_seeds,
    write_dataset,
)

CHECKPOINT_NAME = "checkpoint.json"
DATASET_NAME = "dataset.jsonl"
REPORT_NAME = "filter_report.json"
_STATE_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    task: TaskSpec
    plan: GenerationPlan = GenerationPlan()
    decoding: DecodingConfig = DecodingConfig()
    bounds: LengthBounds = LengthBounds()
    skip_consistency: bool = False
    gateway: Optional[GatewayConfig] = None
    output_dir: str = "."

    def fingerprint(self) -> str:
        """Stable hash of everything that shapes the run's outputs."""
        payload = {
            "task": self.task.to_dict(),
            "plan": self.plan.to_dict(),
            "decoding": self.decoding.to_dict(),
            "bounds": self.bounds.to_dict(),
            "skip_consistency": self.skip_consistency,
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class PipelineState:
    """Persistent progress of the loop, one entry per label."""

    config_hash: str
    rng_seed: int
    accepted: Dict[str, List[LabeledExample]] = field(default_factory=dict)
    rounds_used: Dict[str, int] = field(default_factory=dict)
    report: FilterReport = field(default_factory=FilterReport)

    def to_dict(self) -> dict:
        return {
            "version": _STATE_VERSION,
            "config_hash": self.config_hash,
            "rng_seed": self.rng_seed,
            "accepted": {
                label: [example.to_dict() for example in examples]
                for label, examples in self.accepted.items()
            },
            "rounds_used": dict(self.rounds_used),
            "report": self.report.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineState":
        try:
            state = cls(
                config_hash=data["config_hash"],
                rng_seed=int(data["rng_seed"]),
                rounds_used={
                    label: int(value)
                    for label, value in data["rounds_used"].items()
                },
                report=FilterReport.from_dict(data["report"]),
            )
            for label, records in data["accepted"].items():
                state.accepted[label] = [
                    LabeledExample(
                        text=record["text"],
                        label=record["label"],
                        source=record["source"],
                        round=record["round"],
                        verdict=record["verdict"],
                    )
                    for record in records
                ]
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptCheckpoint(f"checkpoint is unreadable: {exc}") from exc
        return state


def _atomic_write_json(path: str, payload: dict) -> None:
    directory = os.path.dirname(path) or "."
    fd, temp_path = tempfile.mkstemp(dir=directory, prefix=".ckpt-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        os.replace(temp_path, path)
    except OSError as exc:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_checkpoint(path: str) -> PipelineState:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptCheckpoint(f"checkpoint is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise CorruptCheckpoint("checkpoint is not a JSON object")
    return PipelineState.from_dict(data)


class _Orchestrator:
    """Single-run driver bound to one config, gateway, and seed set."""

    def __init__(
        self,
        config: PipelineConfig,
        gateway: Gateway,
        seed_pool: Sequence[LabeledExample],
    ):
        self.config = config
        self.gateway = gateway
        self.task = config.task
        self.plan = config.plan
        self.seeds = select_seeds(
            seed_pool, self.plan.seeds_per_class, self.plan.rng_seed
        )
        self.seeds_by_label: Dict[str, List[LabeledExample]] = {}
        for seed in self.seeds:
            label = self.task.canonical_label(seed.label)
            self.seeds_by_label.setdefault(label, []).append(seed)
        missing = [
            label for label in self.task.labels if label not in self.seeds_by_label
        ]
        if missing:
            raise ValueError(f"seed dataset has no examples for labels: {missing}")

    def checkpoint_path(self) -> str:
        return os.path.join(self.config.output_dir, CHECKPOINT_NAME)

    def run(self, state: PipelineState) -> Tuple[List[LabeledExample], FilterReport]:
        index = DedupIndex(seed.text for seed in self.seeds)
        for examples in state.accepted.values():
            for example in examples:
                index.add(example.text)

        for label in self.task.labels:
            accepted = state.accepted.setdefault(label, [])
            start_round = state.rounds_used.get(label, 0) + 1
            for round_no in range(start_round, self.plan.max_rounds + 1):
                if len(accepted) >= self.plan.n_per_class:
                    break
                self._run_round(state, index, label, round_no)
            if len(accepted) < self.plan.n_per_class:
                raise InsufficientYield(
                    label, len(accepted), self.plan.n_per_class
                )

        dataset = self._final_dataset(state)
        self._write_outputs(dataset, state.report)
        return dataset, state.report

    def _run_round(
        self,
        state: PipelineState,
        index: DedupIndex,
        label: str,
        round_no: int,
    ) -> None:
        """One transactional generate-filter round for one label."""
        accepted = state.accepted[label]
        added_keys: List[str] = []
        verdicts: List[Tuple[Candidate, VerdictKind]] = []
        fresh: List[LabeledExample] = []
        try:
            candidates = generate_batch(
                self.gateway,
                self.task,
                label,
                self.seeds_by_label[label],
                self.config.decoding,
                round_no,
            )[: self.plan.batch_size]

            for candidate in candidates:
                if len(accepted) + len(fresh) >= self.plan.n_per_class:
                    break
                verdict = basic_filter(
                    candidate, index, self.config.bounds, self.task
                )
                if verdict.kind is not VerdictKind.ACCEPTED:
                    verdicts.append((candidate, verdict.kind))
                    continue
                added_keys.append(candidate.text)
                if not self.config.skip_consistency:
                    verdict = consistency_filter(
                        self.gateway,
                        self.task,
                        self.seeds,
                        candidate,
                        self.plan.rng_seed,
                    )
                verdicts.append((candidate, verdict.kind))
                if verdict.kind is VerdictKind.ACCEPTED:
                    fresh.append(
                        LabeledExample(
                            text=candidate.text,
                            label=label,
                            source=SOURCE_SYNTHETIC,
                            round=round_no,
                            verdict=verdict.kind.value,
                        )
                    )
        except GatewayError:
            # Roll the torn round back, persist the committed state, re-raise.
            for key in added_keys:
                index.discard(key)
            self._checkpoint(state)
            raise

        for candidate, kind in verdicts:
            state.report.record(label, kind)
        accepted.extend(fresh)
        state.rounds_used[label] = round_no
        state.report.note_round(label, round_no)
        self._checkpoint(state)

    def _checkpoint(self, state: PipelineState) -> None:
        _atomic_write_json(self.checkpoint_path(), state.to_dict())

    def _final_dataset(self, state: PipelineState) -> List[LabeledExample]:
        dataset = list(self.seeds)
        for label in self.task.labels:
            dataset.extend(state.accepted.get(label, []))
        return dataset

    def _write_outputs(
        self, dataset: List[LabeledExample], report: FilterReport
    ) -> None:
        write_dataset(os.path.join(self.config.output_dir, DATASET_NAME), dataset)
        _atomic_write_json(
            os.path.join(self.config.output_dir, REPORT_NAME), report.to_dict()
        )


def _locked(output_dir: str) -> FileLock:
    lock = FileLock(os.path.join(output_dir, ".lock"))
    try:
        lock.acquire(timeout=0)
    except LockTimeout:
        raise PipelineLocked(f"another run owns {output_dir}")
    return lock


def run_pipeline(
    config: PipelineConfig,
    gateway: Gateway,
    seed_pool: Sequence[LabeledExample],
) -> Tuple[List[LabeledExample], FilterReport]:
    """Fill every label's quota from scratch; see the module docstring."""
    os.makedirs(config.output_dir, exist_ok=True)
    lock = _locked(config.output_dir)
    try:
        orchestrator = _Orchestrator(config, gateway, seed_pool)
        state = PipelineState(
            config_hash=config.fingerprint(), rng_seed=config.plan.rng_seed
        )
        return orchestrator.run(state)
    finally:
        lock.release()


def resume(
    config: PipelineConfig,
    gateway: Gateway,
    seed_pool: Sequence[LabeledExample],
    checkpoint_path: Optional[str] = None,
) -> Tuple[List[LabeledExample], FilterReport]:
    """Continue an interrupted run from its checkpoint.

    The checkpoint's config hash must match the supplied config; given the
    same gateway behavior, the final outputs are identical to an
    uninterrupted run.
    """
    path = checkpoint_path or os.path.join(config.output_dir, CHECKPOINT_NAME)
    state = load_checkpoint(path)
    if state.config_hash != config.fingerprint():
        raise ConfigMismatch(
            "checkpoint was produced by a different configuration"
        )
    lock = _locked(config.output_dir)
    try:
        orchestrator = _Orchestrator(config, gateway, seed_pool)
        return orchestrator.run(state)
    finally:
        lock.release()


def assemble_training_set(
    real: Sequence[LabeledExample],
    synthetic: Sequence[LabeledExample],
    task: TaskSpec,
    rng_seed: int,
    out_path: str,
) -> List[dict]:
    """Write trainer-ready JSONL: zero-shot prompt -> " " + gold label.

    Record order is a deterministic shuffle of real + synthetic so the
    trainer never sees all of one class in a row.
    """
    combined = list(real) + list(synthetic)
    SplitMix64(rng_seed).shuffle(combined)
    records = [
        {
            "prompt": render_zero_shot_prompt(task, example.text).text,
            "completion": " " + task.canonical_label(example.label),
        }
        for example in combined
    ]
    try:
        with open(out_path, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record, ensure_ascii=False))
                handle.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write training set {out_path}: {exc}") from exc
    return records
