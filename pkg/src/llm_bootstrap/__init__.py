"""Bootstrap an efficient text classifier from a handful of labeled examples.

The pipeline generates synthetic examples with an LLM through class-
conditioned few-shot prompts, filters them with the same model's own
classification judgment, and exports the augmented set for adapter
fine-tuning. Evaluation covers zero-shot, in-context, and tuned inference.
"""

from .task_model import (
    DecodingConfig,
    FilterVerdict,
    GenerationPlan,
    LabeledExample,
    TaskSpec,
    VerdictKind,
    load_dataset,
    load_task,
    select_seeds,
    write_dataset,
)
from .gateway import (
    CompletionRequest,
    CompletionResponse,
    GatewayConfig,
    HttpGateway,
    ScriptedGateway,
)
from .prompts import (
    RenderedPrompt,
    render_classification_prompt,
    render_generation_prompt,
    render_zero_shot_prompt,
)
from .generation import Candidate, generate_batch, parse_completion
from .filtering import (
    DedupIndex,
    FilterReport,
    LengthBounds,
    basic_filter,
    consistency_filter,
    normalize,
    parse_label,
)
from .pipeline import (
    PipelineConfig,
    assemble_training_set,
    resume,
    run_pipeline,
)
from .diversity import (
    DiversityCurve,
    FrequencyTable,
    diversity_curve,
    token_frequencies,
    unique_ngrams,
)
from .evaluation import EvalKind, EvalMode, EvalSummary, classify_one, evaluate

__version__ = "0.1.0"
