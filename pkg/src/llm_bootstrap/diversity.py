"""Lexical diversity metrics: unique n-gram counts and token frequencies.

Tokenization is deliberately plain: lowercase, split on whitespace. N-gram
windows never span text boundaries. Curve points are computed on nested
prefixes of one deterministic shuffle, which makes the unique-count curve
monotone by construction.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from .errors import SizeExceedsDataset
from .rng import SplitMix64
from .task_model import LabeledExample

# Small built-in stopword list for frequency tables; callers can override.
DEFAULT_STOPWORDS: FrozenSet[str] = frozenset(
    """a an and are as at be but by for from has have if in into is it its of
    on or that the their this to was were will with""".split()
)


@dataclass(frozen=True)
class DiversityCurve:
    points: Tuple[Tuple[int, int], ...]
    n: int
    cohort: str

    def __post_init__(self):
        sizes = [size for size, _ in self.points]
        counts = [count for _, count in self.points]
        if sizes != sorted(set(sizes)):
            raise ValueError("data sizes must be strictly increasing")
        if counts != sorted(counts):
            raise ValueError("unique counts must be non-decreasing")


@dataclass(frozen=True)
class FrequencyTable:
    entries: Tuple[Tuple[str, int], ...]
    cohort: str

    def __post_init__(self):
        tokens = [token for token, _ in self.entries]
        if len(tokens) != len(set(tokens)):
            raise ValueError("tokens must be unique")
        if any(count < 1 for _, count in self.entries):
            raise ValueError("counts must be >= 1")


def _tokens(text: str, char_level: bool = False) -> List[str]:
    lowered = text.lower()
    return list(lowered) if char_level else lowered.split()


def unique_ngrams(texts: Sequence[str], n: int, char_level: bool = False) -> int:
    """Distinct n-token sliding windows across all texts.

    Word-level by default; char_level switches to character windows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    seen = set()
    for text in texts:
        tokens = _tokens(text, char_level)
        if len(tokens) < n:
            continue
        seen.update(zip(*(tokens[i:] for i in range(n))))
    return len(seen)


def _cohort_of(dataset: Sequence[LabeledExample]) -> str:
    sources = {example.source for example in dataset}
    return sources.pop() if len(sources) == 1 else "mixed"


def diversity_curve(
    dataset: Sequence[LabeledExample],
    sizes: Sequence[int],
    n: int,
    rng_seed: int,
    char_level: bool = False,
) -> DiversityCurve:
    """Unique n-gram counts over nested prefixes of one shuffled draw."""
    if list(sizes) != sorted(set(sizes)):
        raise ValueError("sizes must be sorted ascending without repeats")
    if sizes and sizes[-1] > len(dataset):
        raise SizeExceedsDataset(sizes[-1], len(dataset))
    order = list(dataset)
    SplitMix64(rng_seed).shuffle(order)
    texts = [example.text for example in order]
    points = tuple(
        (size, unique_ngrams(texts[:size], n, char_level)) for size in sizes
    )
    return DiversityCurve(points=points, n=n, cohort=_cohort_of(dataset))


def token_frequencies(
    texts: Sequence[str],
    top_k: int,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
    cohort: str = "mixed",
) -> FrequencyTable:
    """Top tokens by count desc then token asc, stopwords and 1-char dropped."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    drop = {word.lower() for word in stopwords}
    counts: Dict[str, int] = {}
    for text in texts:
        for token in _tokens(text):
            token = token.strip(string.punctuation)
            if len(token) <= 1 or token in drop:
                continue
            counts[token] = counts.get(token, 0) + 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return FrequencyTable(entries=tuple(ranked[:top_k]), cohort=cohort)
