import os

import pytest

from lora_trainer.data import load_training_records
from lora_trainer.toy import build_toy_base

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
TRAIN_PATH = os.path.join(FIXTURES, "train.jsonl")
TASK_PATH = os.path.join(FIXTURES, "task.json")
DATASET_PATH = os.path.join(FIXTURES, "dataset.jsonl")


@pytest.fixture(scope="session")
def train_records():
    return load_training_records(TRAIN_PATH)


@pytest.fixture(scope="session")
def toy_base(tmp_path_factory, train_records):
    """One tiny base model shared by the whole session."""
    out_dir = str(tmp_path_factory.mktemp("toy-base"))
    corpus = [record["prompt"] + record["completion"] for record in train_records]
    return build_toy_base(out_dir, corpus, seed=0)
