"""Low-rank adapter fine-tuning and serving for prompt/completion exports."""

from .config import TrainerConfig
from .errors import (
    ArtifactMismatch,
    ModelLoadFailure,
    NonFiniteLoss,
    PortInUse,
    SchemaMismatch,
    TrainerError,
)
from .lora import LoraLinear, apply_lora, load_adapter, save_adapter
from .serving import AdapterServer, serve_adapter
from .toy import build_toy_base
from .training import TrainingRunReport, train_adapter

__version__ = "0.1.0"
