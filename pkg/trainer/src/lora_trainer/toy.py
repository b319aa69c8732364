"""Build a desk-scale base model entirely offline.

A two-layer Llama-architecture model (hidden 64) with a WordLevel tokenizer
trained on the caller's corpus. Around 100k parameters: big enough to learn
a 50-record classification export, small enough for test-suite turnaround.
The output directory loads through the standard Auto* entry points like any
hub checkpoint, so it doubles as a stand-in for real base models in tests.
"""

from __future__ import annotations

from typing import Iterable, List

from tokenizers import Tokenizer, models, pre_tokenizers, trainers
from transformers import (
    LlamaConfig,
    LlamaForCausalLM,
    PreTrainedTokenizerFast,
)


def build_toy_base(out_dir: str, corpus: Iterable[str], seed: int = 0) -> str:
    """Create and save a tiny random-weight causal LM with its tokenizer."""
    import torch

    texts: List[str] = [text for text in corpus if text.strip()]
    if not texts:
        raise ValueError("corpus must contain non-empty text")

    tokenizer = Tokenizer(models.WordLevel(unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    trainer = trainers.WordLevelTrainer(special_tokens=["<unk>", "<pad>", "</s>"])
    tokenizer.train_from_iterator(texts, trainer)
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        unk_token="<unk>",
        pad_token="<pad>",
        eos_token="</s>",
    )
    fast.save_pretrained(out_dir)

    torch.manual_seed(seed)
    # initializer_range is scaled to the tiny hidden size (1/sqrt(64));
    # the stock 0.02 leaves the frozen lm_head too small to separate
    # logits, putting a floor under any adapter-only fine-tune.
    config = LlamaConfig(
        vocab_size=fast.vocab_size,
        hidden_size=64,
        intermediate_size=128,
        num_hidden_layers=2,
        num_attention_heads=2,
        num_key_value_heads=2,
        max_position_embeddings=512,
        initializer_range=0.125,
        pad_token_id=fast.pad_token_id,
        eos_token_id=fast.eos_token_id,
    )
    model = LlamaForCausalLM(config)
    model.save_pretrained(out_dir)
    return out_dir
