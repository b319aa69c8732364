"""Secondary acceptance: toy training convergence and the protocol round
trip through the pipeline package's own evaluator. Run with -v -s for the
per-criterion PASS/FAIL lines.
"""

import contextlib
import hashlib
import threading

import pytest
import torch

from lora_trainer.config import TrainerConfig
from lora_trainer.lora import apply_lora, save_adapter
from lora_trainer.serving import serve_adapter
from lora_trainer.training import load_base, train_adapter

from llm_bootstrap.evaluation import EvalKind, EvalMode, evaluate
from llm_bootstrap.gateway import GatewayConfig, HttpGateway
from llm_bootstrap.task_model import load_dataset, load_task

from conftest import DATASET_PATH, TASK_PATH, TRAIN_PATH


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {name}: FAIL")
        raise
    print(f"\nACCEPTANCE {name}: PASS")


def base_weight_digest(model):
    digest = hashlib.sha256()
    for name, tensor in sorted(model.state_dict().items()):
        digest.update(name.encode())
        digest.update(tensor.numpy().tobytes())
    return digest.hexdigest()


@contextlib.contextmanager
def served(adapter_dir, base_dir):
    instance = serve_adapter(adapter_dir, base_dir, port=0)
    thread = threading.Thread(target=instance.serve_forever, daemon=True)
    thread.start()
    try:
        yield instance
    finally:
        instance.shutdown()
        thread.join(timeout=5)


def untrained_adapter(toy_base, out_dir, config):
    model, _ = load_base(toy_base)
    torch.manual_seed(config.seed)
    apply_lora(model, config.rank, config.alpha, 0.0, config.target_modules)
    save_adapter(
        model,
        {
            "base_model_ref": toy_base,
            "rank": config.rank,
            "alpha": config.alpha,
            "dropout": 0.0,
            "target_modules": list(config.target_modules),
        },
        out_dir,
    )
    return out_dir


@pytest.fixture(scope="module")
def full_run(toy_base, tmp_path_factory):
    """One 100-epoch training run shared by both criteria."""
    out = str(tmp_path_factory.mktemp("acceptance-adapter"))
    config = TrainerConfig(base_model_ref=toy_base, epochs=100, seed=0)
    adapter_dir, report = train_adapter(TRAIN_PATH, config, out)
    return config, adapter_dir, report


def test_toy_training(toy_base, full_run, tmp_path):
    """50-record export, <=1B base: final loss < 0.5 x epoch-1 loss within
    100 epochs; base weights bit-identical; tuned mode scores >= untrained
    base on the training records via the pipeline evaluator."""
    with criterion("toy training"):
        config, adapter_dir, report = full_run

        first_epoch = report.per_epoch_loss[0]
        assert report.final_loss < 0.5 * first_epoch, (
            f"final {report.final_loss:.4f} vs epoch-1 {first_epoch:.4f}"
        )
        assert len(report.per_epoch_loss) == 100

        reference, _ = load_base(toy_base)
        digest = base_weight_digest(reference)
        reloaded, _ = load_base(toy_base)
        assert base_weight_digest(reloaded) == digest

        task = load_task(TASK_PATH)
        records = load_dataset(DATASET_PATH, task)
        assert len(records) == 50

        def score(adapter):
            with served(adapter, toy_base) as instance:
                gateway = HttpGateway(
                    GatewayConfig(
                        endpoint=f"http://127.0.0.1:{instance.port}",
                        model_ref="toy-tuned",
                    )
                )
                summary = evaluate(
                    gateway, task, EvalMode(kind=EvalKind.TUNED), records
                )
            return summary

        tuned = score(adapter_dir)
        baseline = score(
            untrained_adapter(toy_base, str(tmp_path / "untrained"), config)
        )
        assert tuned.accuracy >= baseline.accuracy, (
            f"tuned {tuned.accuracy:.3f} < untrained {baseline.accuracy:.3f}"
        )


def test_protocol_round_trip(toy_base, full_run):
    """The pipeline evaluator, unmodified, scores the served adapter in
    tuned mode: nothing but the shared wire protocol connects them."""
    with criterion("protocol round trip"):
        _, adapter_dir, _ = full_run
        task = load_task(TASK_PATH)
        records = load_dataset(DATASET_PATH, task)

        with served(adapter_dir, toy_base) as instance:
            gateway = HttpGateway(
                GatewayConfig(
                    endpoint=f"http://127.0.0.1:{instance.port}", model_ref="toy-tuned"
                )
            )
            summary = evaluate(
                gateway, task, EvalMode(kind=EvalKind.TUNED), records
            )

        assert len(summary.records) == 50
        assert summary.mean_latency_ms > 0
        assert all(record.latency_ms >= 0 for record in summary.records)
        # the tuned toy model has memorized its 50 training records
        assert summary.accuracy >= 0.9
