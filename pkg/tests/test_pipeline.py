import json
import os

import pytest

from llm_bootstrap.errors import (
    ConfigMismatch,
    CorruptCheckpoint,
    InsufficientYield,
    PipelineLocked,
    TransportFailure,
)
from llm_bootstrap.filtering import LengthBounds
from llm_bootstrap.gateway import ScriptedGateway
from llm_bootstrap.pipeline import (
    CHECKPOINT_NAME,
    DATASET_NAME,
    REPORT_NAME,
    PipelineConfig,
    assemble_training_set,
    load_checkpoint,
    resume,
    run_pipeline,
)
from llm_bootstrap.task_model import (
    SOURCE_REAL,
    SOURCE_SYNTHETIC,
    DecodingConfig,
    GenerationPlan,
    load_dataset,
)

from conftest import synthetic_example
from pipeline_scenarios import (
    FailAfter,
    build_script,
    fresh_texts,
    sst2_seed_pool,
    scripted,
)


def make_config(task, out_dir, n=21, **plan_kwargs):
    plan = GenerationPlan(n_per_class=n, rng_seed=7, **plan_kwargs)
    return PipelineConfig(task=task, plan=plan, output_dir=str(out_dir))


class TestRunPipeline:
    def test_seven_round_quota(self, sst2_task, tmp_path):
        # 3 fresh candidates per call, echo oracle: ceil(21/3) = 7 rounds/label
        gateway = scripted(build_script(sst2_task.labels, rounds=7, per_round=3))
        config = make_config(sst2_task, tmp_path)
        dataset, report = run_pipeline(config, gateway, sst2_seed_pool())

        synthetic = [e for e in dataset if e.source == SOURCE_SYNTHETIC]
        assert len(dataset) == 8 + 42
        for label in sst2_task.labels:
            assert sum(1 for e in synthetic if e.label == label) == 21
            assert report.rounds_used[label] == 7
            assert report.accepted(label) == 21

    def test_call_budget_bound(self, sst2_task, tmp_path):
        gateway = scripted(build_script(sst2_task.labels, rounds=7, per_round=3))
        config = make_config(sst2_task, tmp_path, batch_size=8)
        run_pipeline(config, gateway, sst2_seed_pool())
        rounds_total = 14
        assert len(gateway.transcript) <= rounds_total * (1 + 8)
        assert len(gateway.transcript) == 14 + 42  # one call per candidate here

    def test_zero_quota_returns_seeds_only(self, sst2_task, tmp_path):
        gateway = scripted([])
        config = make_config(sst2_task, tmp_path, n=0)
        dataset, report = run_pipeline(config, gateway, sst2_seed_pool())
        assert [e.source for e in dataset] == [SOURCE_REAL] * 8
        assert gateway.transcript == []
        assert report.processed() == 0

    def test_starvation_raises_insufficient_yield(self, sst2_task, tmp_path):
        pool = sst2_seed_pool()
        duplicate = f" {pool[0].text}"
        gateway = scripted([("any", duplicate)] * 3)
        config = make_config(sst2_task, tmp_path, n=5, max_rounds=3)
        with pytest.raises(InsufficientYield) as info:
            run_pipeline(config, gateway, pool)
        assert info.value.label == "Positive"
        assert info.value.accepted == 0
        assert info.value.wanted == 5

    def test_batch_size_caps_candidates_per_round(self, sst2_task, tmp_path):
        # each call parses into 4 candidates but batch_size=2 keeps only 2
        from pipeline_scenarios import completion_for, generation_matcher

        entries = []
        for label in sst2_task.labels:
            for round_no in range(3):
                texts = fresh_texts(label, 4, start=round_no * 4)
                entries.append((generation_matcher(label), completion_for(texts, label)))
                for text in texts[:2]:
                    entries.append((text, label))
        gateway = scripted(entries)
        config = make_config(sst2_task, tmp_path, n=6, batch_size=2, max_rounds=5)
        dataset, report = run_pipeline(config, gateway, sst2_seed_pool())
        for label in sst2_task.labels:
            assert report.accepted(label) == 6
            assert report.rounds_used[label] == 3

    def test_outputs_written(self, sst2_task, tmp_path):
        gateway = scripted(build_script(sst2_task.labels, rounds=2, per_round=3))
        config = make_config(sst2_task, tmp_path, n=5, max_rounds=2)
        dataset, report = run_pipeline(config, gateway, sst2_seed_pool())
        assert load_dataset(str(tmp_path / DATASET_NAME), sst2_task) == dataset
        saved = json.loads((tmp_path / REPORT_NAME).read_text())
        assert saved == report.to_dict()
        assert (tmp_path / CHECKPOINT_NAME).exists()

    def test_synthetic_examples_carry_round_and_verdict(self, sst2_task, tmp_path):
        gateway = scripted(build_script(sst2_task.labels, rounds=2, per_round=3))
        config = make_config(sst2_task, tmp_path, n=5, max_rounds=2)
        dataset, _ = run_pipeline(config, gateway, sst2_seed_pool())
        for example in dataset:
            if example.source == SOURCE_SYNTHETIC:
                assert example.round >= 1
                assert example.verdict == "accepted"
            else:
                assert example.round == 0

    def test_skip_consistency_truncates_to_quota(self, sst2_task, tmp_path):
        entries = []
        from pipeline_scenarios import completion_for, generation_matcher

        for label in sst2_task.labels:
            texts = fresh_texts(label, 8)
            entries.append((generation_matcher(label), completion_for(texts, label)))
        gateway = scripted(entries)
        config = PipelineConfig(
            task=sst2_task,
            plan=GenerationPlan(n_per_class=5, max_rounds=1, rng_seed=7),
            skip_consistency=True,
            output_dir=str(tmp_path),
        )
        dataset, report = run_pipeline(config, gateway, sst2_seed_pool())
        synthetic = [e for e in dataset if e.source == SOURCE_SYNTHETIC]
        assert len(synthetic) == 10
        expected = fresh_texts("Positive", 5) + fresh_texts("Negative", 5)
        assert [e.text for e in synthetic] == expected
        # only generation calls: prompts all end with the bare text marker
        assert len(gateway.transcript) == 2
        for prompt, _ in gateway.transcript:
            assert prompt.endswith("Text:")

    def test_lock_excludes_second_run(self, sst2_task, tmp_path):
        from filelock import FileLock

        os.makedirs(tmp_path, exist_ok=True)
        lock = FileLock(str(tmp_path / ".lock"))
        lock.acquire(timeout=0)
        try:
            with pytest.raises(PipelineLocked):
                run_pipeline(
                    make_config(sst2_task, tmp_path, n=0), scripted([]), sst2_seed_pool()
                )
        finally:
            lock.release()


class TestResume:
    def full_script(self, task):
        return build_script(task.labels, rounds=7, per_round=3)

    def run_full(self, task, out_dir):
        gateway = scripted(self.full_script(task))
        config = make_config(task, out_dir)
        dataset, report = run_pipeline(config, gateway, sst2_seed_pool())
        assemble_training_set(
            [e for e in dataset if e.source == SOURCE_REAL],
            [e for e in dataset if e.source == SOURCE_SYNTHETIC],
            task,
            config.plan.rng_seed,
            os.path.join(str(out_dir), "train.jsonl"),
        )
        return dataset, report

    def test_resume_reproduces_uninterrupted_run(self, sst2_task, tmp_path):
        full_dir = tmp_path / "full"
        cut_dir = tmp_path / "cut"
        full_dir.mkdir(), cut_dir.mkdir()
        self.run_full(sst2_task, full_dir)

        # rounds 1-2 of the first label consume 2 generation + 6 consistency
        # calls; the 9th call (round-3 generation) dies mid-flight
        inner = scripted(self.full_script(sst2_task))
        gateway = FailAfter(inner, 8, TransportFailure("connection reset"))
        config = make_config(sst2_task, cut_dir)
        with pytest.raises(TransportFailure):
            run_pipeline(config, gateway, sst2_seed_pool())

        state = load_checkpoint(str(cut_dir / CHECKPOINT_NAME))
        assert state.rounds_used == {"Positive": 2}
        assert len(state.accepted["Positive"]) == 6

        dataset, _ = resume(
            config, scripted(inner.remaining_script()), sst2_seed_pool()
        )
        assemble_training_set(
            [e for e in dataset if e.source == SOURCE_REAL],
            [e for e in dataset if e.source == SOURCE_SYNTHETIC],
            sst2_task,
            config.plan.rng_seed,
            str(cut_dir / "train.jsonl"),
        )
        for name in (DATASET_NAME, REPORT_NAME, CHECKPOINT_NAME, "train.jsonl"):
            assert (full_dir / name).read_bytes() == (cut_dir / name).read_bytes(), name

    def test_resume_with_changed_config_rejected(self, sst2_task, tmp_path):
        inner = scripted(self.full_script(sst2_task))
        gateway = FailAfter(inner, 8, TransportFailure("boom"))
        config = make_config(sst2_task, tmp_path)
        with pytest.raises(TransportFailure):
            run_pipeline(config, gateway, sst2_seed_pool())
        changed = PipelineConfig(
            task=sst2_task,
            plan=config.plan,
            decoding=DecodingConfig(temperature=0.7),
            output_dir=config.output_dir,
        )
        with pytest.raises(ConfigMismatch):
            resume(changed, scripted(inner.remaining_script()), sst2_seed_pool())

    def test_truncated_checkpoint_rejected(self, sst2_task, tmp_path):
        inner = scripted(self.full_script(sst2_task))
        gateway = FailAfter(inner, 8, TransportFailure("boom"))
        config = make_config(sst2_task, tmp_path)
        with pytest.raises(TransportFailure):
            run_pipeline(config, gateway, sst2_seed_pool())
        path = tmp_path / CHECKPOINT_NAME
        path.write_bytes(path.read_bytes()[: len(path.read_bytes()) // 2])
        with pytest.raises(CorruptCheckpoint):
            resume(config, scripted([]), sst2_seed_pool())

    def test_missing_keys_are_corrupt(self, sst2_task, tmp_path):
        path = tmp_path / CHECKPOINT_NAME
        path.write_text('{"config_hash": "abc"}')
        config = make_config(sst2_task, tmp_path)
        with pytest.raises(CorruptCheckpoint):
            resume(config, scripted([]), sst2_seed_pool(), str(path))


class TestAssembleTrainingSet:
    def synthetic_block(self, label, count):
        return [
            synthetic_example(text, label)
            for text in fresh_texts(label, count, start=500)
        ]

    def test_four_plus_twentyone_gives_fifty(self, sst2_task, tmp_path):
        real = sst2_seed_pool()
        synthetic = self.synthetic_block("Positive", 21) + self.synthetic_block(
            "Negative", 21
        )
        out = str(tmp_path / "train.jsonl")
        records = assemble_training_set(real, synthetic, sst2_task, 7, out)
        assert len(records) == 50
        on_disk = [json.loads(line) for line in open(out)]
        assert on_disk == records

    def test_record_format(self, sst2_task, tmp_path):
        real = sst2_seed_pool()
        out = str(tmp_path / "train.jsonl")
        records = assemble_training_set(real, [], sst2_task, 7, out)
        for record in records:
            assert set(record) == {"prompt", "completion"}
            assert record["prompt"].endswith(sst2_task.label_marker)
            assert record["completion"].startswith(" ")
            assert record["completion"][1:] in sst2_task.labels

    def test_empty_synthetic_is_real_only_baseline(self, sst2_task, tmp_path):
        real = sst2_seed_pool()
        out = str(tmp_path / "train.jsonl")
        records = assemble_training_set(real, [], sst2_task, 7, out)
        assert len(records) == len(real)

    def test_shuffle_deterministic_per_seed(self, sst2_task, tmp_path):
        real = sst2_seed_pool()
        synthetic = self.synthetic_block("Positive", 10)
        a = assemble_training_set(real, synthetic, sst2_task, 7, str(tmp_path / "a.jsonl"))
        b = assemble_training_set(real, synthetic, sst2_task, 7, str(tmp_path / "b.jsonl"))
        c = assemble_training_set(real, synthetic, sst2_task, 8, str(tmp_path / "c.jsonl"))
        assert a == b
        assert a != c
        assert sorted(map(json.dumps, a)) == sorted(map(json.dumps, c))
